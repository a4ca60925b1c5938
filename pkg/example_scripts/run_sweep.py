from header import *

name = os.path.basename(__file__)[:-3]
directory = output_root / name

sweep_scenario = get_preset("sweep_small").scenario()
report = run_sweep(
    sweep_scenario,
    ScenarioSweep(sweep_scenario.problem.u0_scale, 0.5, 4, 8),
    max_workers=4,
    progress=True,
)
formats.write_sweep(directory / "sweep.csv", report)
sweep_scenario.save_snapshot(directory)
print("blow-up nonincreasing:", report.blowup_nonincreasing)
print("lambda nondecreasing:", report.lambda_nondecreasing)
