from liewave.cli import derive_seed, main

SOLVE_INI = """
[group]
kind = torus
n = 1
bandwidth = 4

[solve]
p = 2.0
epsilon = 0.3
u0 = trivial-plus-lowest
u1 = trivial-plus-lowest
dt = 0.005
t_max = 2.0
"""

SWEEP_INI = """
[group]
kind = torus
n = 1
bandwidth = 4

[solve]
p = 2.0
u0 = constant:0.025
u1 = constant:0.025
dt = 0.005

[lifespan-sweep]
mode = scalar
count = 6
t_max = 4000
slope_tolerance = 0.15
"""


def run(tmp_path, command, ini=None, extra=(), seed=1):
    tmp_path.mkdir(parents=True, exist_ok=True)
    argv = [command, "--out", str(tmp_path / "out")]
    if ini is not None:
        cfg = tmp_path / "cfg.ini"
        cfg.write_text(ini)
        argv += ["--config", str(cfg)]
    argv += ["--seed", str(seed)]
    argv += list(extra)
    return main(argv), tmp_path / "out"


class TestExitCodes:
    def test_unknown_key_is_config_error(self, tmp_path):
        code, _ = run(tmp_path, "solve", "[group]\nbogus = 1\n")
        assert code == 2

    def test_unknown_section_is_config_error(self, tmp_path):
        code, _ = run(tmp_path, "solve", "[mystery]\nx = 1\n")
        assert code == 2

    def test_bad_value_is_config_error(self, tmp_path):
        code, _ = run(tmp_path, "solve", "[solve]\ndt = soon\n")
        assert code == 2

    def test_missing_config_file(self, tmp_path):
        code = main(["solve", "--config", str(tmp_path / "nope.ini"), "--out", str(tmp_path)])
        assert code == 2

    def test_resource_limit(self, tmp_path):
        ini = "[group]\nmax_grid_points = 10\n[transform-check]\ncases = su2:8\n"
        code, _ = run(tmp_path, "transform-check", ini)
        assert code == 3

    def test_undersampled_grid_fails_checks(self, tmp_path):
        ini = ("[transform-check]\ncases = torus:1:8\noversampling = 0.5\n"
               "allow_undersampled = true\n")
        code, out = run(tmp_path, "transform-check", ini)
        assert code == 1
        assert "status = fail" in (out / "report.txt").read_text()

    def test_sweep_slope_band_enforced(self, tmp_path):
        ini = SWEEP_INI.replace("slope_tolerance = 0.15", "slope_tolerance = 0.001")
        code, _ = run(tmp_path, "lifespan-sweep", ini)
        assert code == 1


class TestTransformCheck:
    def test_default_empty_config(self, tmp_path):
        # documented defaults: Torus(2) B=8 and SU(2) B=8, all checks pass
        code, out = run(tmp_path, "transform-check", "")
        assert code == 0
        text = (out / "report.txt").read_text()
        assert "status = ok" in text
        assert (out / "irreps_torus2_B8.csv").exists()
        assert (out / "irreps_su2_B8.csv").exists()

    def test_irrep_table_contents(self, tmp_path):
        code, out = run(tmp_path, "transform-check", "[transform-check]\ncases = su2:1\n")
        assert code == 0
        rows = (out / "irreps_su2_B1.csv").read_text().strip().splitlines()
        assert rows[0] == "label,dim,eigenvalue"
        assert rows[1].startswith("0,1,0")
        assert rows[2].startswith("0.5,2,0.75")


class TestSolveCommand:
    def test_outputs_and_columns(self, tmp_path):
        code, out = run(tmp_path, "solve", SOLVE_INI)
        assert code == 0
        header = (out / "trajectory.csv").read_text().splitlines()[0]
        assert header == "t,U0,l2_u,hdot1_u,l2_ut"
        assert (out / "run.txt").exists()
        assert (out / "trajectory.png").exists()
        manifest = (out / "manifest.txt").read_text()
        assert "command = solve" in manifest
        assert "output = trajectory.csv" in manifest

    def test_no_plots_flag(self, tmp_path):
        code, out = run(tmp_path, "solve", SOLVE_INI, extra=["--no-plots"])
        assert code == 0
        assert not (out / "trajectory.png").exists()

    def test_crlf_line_endings(self, tmp_path):
        _, out = run(tmp_path, "solve", SOLVE_INI)
        raw = (out / "trajectory.csv").read_bytes()
        assert b"\r\n" in raw


class TestDeterminism:
    def test_solve_byte_identical(self, tmp_path):
        ini = SOLVE_INI.replace("trivial-plus-lowest", "random-nonneg")
        _, out1 = run(tmp_path / "a", "solve", ini, seed=7)
        _, out2 = run(tmp_path / "b", "solve", ini, seed=7)
        assert (out1 / "trajectory.csv").read_bytes() == (out2 / "trajectory.csv").read_bytes()

    def test_solve_seed_changes_random_data(self, tmp_path):
        ini = SOLVE_INI.replace("trivial-plus-lowest", "random-nonneg")
        _, out1 = run(tmp_path / "a", "solve", ini, seed=7)
        _, out2 = run(tmp_path / "b", "solve", ini, seed=8)
        assert (out1 / "trajectory.csv").read_bytes() != (out2 / "trajectory.csv").read_bytes()

    def test_sweep_byte_identical(self, tmp_path):
        _, out1 = run(tmp_path / "a", "lifespan-sweep", SWEEP_INI, seed=3)
        _, out2 = run(tmp_path / "b", "lifespan-sweep", SWEEP_INI, seed=3)
        assert (out1 / "sweep.csv").read_bytes() == (out2 / "sweep.csv").read_bytes()

    def test_decay_byte_identical(self, tmp_path):
        ini = "[group]\nkind = torus\nn = 2\n[linear-decay]\ncount = 2\npoints = 30\n"
        _, out1 = run(tmp_path / "a", "linear-decay", ini, seed=11)
        _, out2 = run(tmp_path / "b", "linear-decay", ini, seed=11)
        assert (out1 / "decay.csv").read_bytes() == (out2 / "decay.csv").read_bytes()


class TestEnvOverrides:
    def test_seed_from_environment(self, tmp_path, monkeypatch):
        ini = SOLVE_INI.replace("trivial-plus-lowest", "random-nonneg")
        cfg = tmp_path / "cfg.ini"
        cfg.write_text(ini)
        monkeypatch.setenv("LIEWAVE_SEED", "7")
        code = main(["solve", "--config", str(cfg), "--out", str(tmp_path / "env")])
        assert code == 0
        _, flagged = run(tmp_path / "flag", "solve", ini, seed=7)
        assert ((tmp_path / "env" / "trajectory.csv").read_bytes()
                == (flagged / "trajectory.csv").read_bytes())

    def test_out_from_environment(self, tmp_path, monkeypatch):
        cfg = tmp_path / "cfg.ini"
        cfg.write_text(SOLVE_INI)
        monkeypatch.setenv("LIEWAVE_OUT", str(tmp_path / "envout"))
        monkeypatch.setenv("LIEWAVE_PLOTS", "false")
        code = main(["solve", "--config", str(cfg), "--seed", "1"])
        assert code == 0
        assert (tmp_path / "envout" / "trajectory.csv").exists()
        assert not (tmp_path / "envout" / "trajectory.png").exists()


class TestLinearDecayCommand:
    def test_columns_and_fit(self, tmp_path):
        ini = "[group]\nkind = torus\nn = 2\n[linear-decay]\ncount = 3\npoints = 30\n"
        code, out = run(tmp_path, "linear-decay", ini)
        assert code == 0
        header = (out / "decay.csv").read_text().splitlines()[0]
        assert header == "t,l2_u,hdot1_u,l2_ut,bound1,bound2,bound3"
        fit = (out / "fit.txt").read_text()
        assert "dataset0.C1" in fit and "dataset2.C3" in fit
        assert (out / "decay.png").exists()


class TestLifespanSweepCommand:
    def test_outputs(self, tmp_path):
        code, out = run(tmp_path, "lifespan-sweep", SWEEP_INI)
        assert code == 0
        header = (out / "sweep.csv").read_text().splitlines()[0]
        assert header == "epsilon,T_num,bound,compensated"
        fit = (out / "fit.txt").read_text()
        assert "within_tolerance = True" in fit
        assert (out / "lifespan.png").exists()


class TestBoundsCommand:
    def test_sequences_table(self, tmp_path):
        code, out = run(tmp_path, "bounds", SOLVE_INI)
        assert code == 0
        lines = (out / "sequences.csv").read_text().splitlines()
        assert lines[0] == "j,gamma_j,ell_j,L_j,log_C_j"
        first = lines[1].split(",")
        assert first[0] == "0" and first[1] == "0" and first[2] == "2" and first[3] == "2"
        constants = (out / "constants.txt").read_text()
        assert "epsilon0" in constants and "j0" in constants

    def test_trajectory_cross_check(self, tmp_path):
        code, solved = run(tmp_path / "s", "solve",
                           SOLVE_INI.replace("t_max = 2.0", "t_max = 30.0")
                                    .replace("epsilon = 0.3", "epsilon = 0.05")
                                    .replace("dt = 0.005", "dt = 0.001"))
        assert code == 0
        ini = (SOLVE_INI.replace("epsilon = 0.3", "epsilon = 0.05")
               + f"\n[bounds]\njmax = 4\ntrajectory = {solved / 'trajectory.csv'}\n")
        code, out = run(tmp_path / "b", "bounds", ini)
        assert code == 0
        verify = (out / "verify.txt").read_text()
        assert "j0.passed = True" in verify
        assert "j4.passed = True" in verify


def test_seed_derivation_is_stable():
    assert derive_seed(0, 0) != derive_seed(0, 1)
    assert derive_seed(0, 0) == derive_seed(0, 0)
    assert 0 <= derive_seed(123, 45) < 2**64


def test_threads_flag_accepted(tmp_path):
    ini = (
        "[group]\nkind = torus\nn = 1\nbandwidth = 4\n"
        "[solve]\np = 2.0\nu0 = constant\nu1 = constant\ndt = 0.005\n"
        "record_every = 20\nrecord_source = false\n"
        "[lifespan-sweep]\nmode = pde\neps_min = 0.1\neps_max = 0.5\ncount = 4\n"
        "t_max = 40\nslope_tolerance = 0.6\n"
    )
    code, out = run(tmp_path, "lifespan-sweep", ini, extra=["--threads", "3"])
    assert code == 0
    assert (out / "sweep.csv").exists()
