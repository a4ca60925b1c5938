from header import *

name = os.path.basename(__file__)[:-3]
directory = output_root / name

dispersive = get_preset("dispersive").scenario()
c = dispersive.coefficient_set()
grid = dispersive.make_grid()
finals = {}
for dt in (0.02, 0.01, 0.005):
    dispersive.run.dt.set(dt)
    traj = picard.solve_direct(c, grid, dispersive.picard_config(), progress=True)
    finals[dt] = traj.snapshot(traj.K)
    formats.write_snapshot(finals[dt], traj.T, c.m, c.s, directory / f"u_final_dt{dt:g}.ghch")
dispersive.save_snapshot(directory)
dispersive.close()

# constant coefficients: the integrating factor is exact, so all steps agree
for dt, u in finals.items():
    print(dt, np.max(np.abs(u.values - finals[0.005].values)))
