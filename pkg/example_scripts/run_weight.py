from header import *

name = os.path.basename(__file__)[:-3]
directory = output_root / name

for variant in ("exact", "literal"):
    scenario.weight.variant.set(variant)
    wf = coefficients.compute_weight(c, 0.0, grid, variant, horizon=scenario.run.T())
    residual = coefficients.weight_residual_field(c, wf, 0.0, grid)
    formats.write_weight(directory / f"weight_{variant}.csv", grid, wf, wf.g, residual)
    print(variant, np.max(np.abs(residual.values)) / np.max(np.abs(wf.g.values)))
scenario.save_snapshot(directory)
