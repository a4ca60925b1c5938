from header import *

name = os.path.basename(__file__)[:-3]
directory = output_root / name

result = picard.run(c, grid, scenario.picard_config(), progress=True)
trace = energy_monitor.trace(
    result.limit, c, c.s, scenario.weight.variant(), scenario.output.snapshot_stride(), progress=True
)
formats.write_trace(trace, result.distances, directory / "trace.csv")
scenario.save_snapshot(directory)

print("converged:", result.converged, "after", result.n_final, "iterations")
print("ratios:", result.ratios)
print("lambda:", trace.lambda_fit, "bound_ok:", trace.bound_ok, "sandwich_ok:", trace.sandwich_ok())
