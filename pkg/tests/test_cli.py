import math

import numpy as np
import pytest

from cavity_echo import fidelity, fock_state
from cavity_echo.cli import main, parse_complex, parse_initial, InputError
from cavity_echo.csvio import HEADER_PREFIX, read_state, read_table

LN2 = math.log(2)


def run(tmp_path, *argv, name="out.csv"):
    out = tmp_path / name
    rc = main([*argv, "--output", str(out)])
    return rc, out


class TestParsing:
    @pytest.mark.parametrize("text, value", [
        ("1", 1), ("0.5+0.5i", 0.5 + 0.5j), ("-2j", -2j), ("1e-3-4i", 1e-3 - 4j), ("i", 1j),
    ])
    def test_complex(self, text, value):
        assert parse_complex(text) == value

    @pytest.mark.parametrize("text", ["abc", "nan", "1+infi", ""])
    def test_complex_rejects(self, text):
        with pytest.raises(InputError):
            parse_complex(text)

    def test_initial(self):
        np.testing.assert_array_equal(parse_initial("fock:2"), [0, 0, 1])
        np.testing.assert_allclose(parse_initial("superposition:1,0,1"), np.array([1, 0, 1]) / math.sqrt(2))
        with pytest.raises(InputError):
            parse_initial("coherent:1")
        with pytest.raises(InputError):
            parse_initial("superposition:0,0")


class TestSimulate:
    def test_free_decay_fit(self, tmp_path, capsys):
        rc, out = run(tmp_path, "simulate", "--t-end", "3")
        assert rc == 0
        header, cols = read_table(out)
        assert header["gamma"] == pytest.approx(1.0)
        assert header["tau_D"] == pytest.approx(LN2 / 2)
        assert header["version"] and header["config"]["n_atoms"] == 400
        np.testing.assert_allclose(cols["abs2_cph"], cols["re_cph"] ** 2 + cols["im_cph"] ** 2,
                                   atol=1e-12)
        assert np.all(np.diff(cols["t"]) > 0)
        y, t = cols["abs2_cph"], cols["t"]
        model = np.exp(-2 * t)
        r2 = 1 - np.sum((y - model) ** 2) / np.sum((y - y.mean()) ** 2)
        assert r2 >= 0.999
        assert "gamma = 1" in capsys.readouterr().out

    def test_header_and_format(self, tmp_path):
        _, out = run(tmp_path, "simulate", "--t-end", "0.5", "--n-atoms", "20", "--width", "10")
        lines = out.read_text().splitlines()
        assert lines[0].startswith(HEADER_PREFIX)
        assert lines[1] == "t,re_cph,im_cph,abs2_cph,p_atoms,norm"
        assert all(len(v.split("e")[0].lstrip("-")) == 13 for v in lines[2].split(","))

    def test_j2pi_fidelity_and_roundtrip(self, tmp_path, capsys):
        sched = tmp_path / "s.txt"
        sched.write_text("J2PI at 3\nend at 6\n")
        state = tmp_path / "final.csv"
        rc, _ = run(tmp_path, "simulate", "--schedule", str(sched), "--final-state", str(state))
        assert rc == 0
        text = capsys.readouterr().out
        line = [l for l in text.splitlines() if "at t = 6:" in l][0]
        reported = float(line.rsplit(":", 1)[1])
        assert reported >= 0.999
        recomputed = fidelity(fock_state(400, 1), read_state(state))
        assert recomputed == pytest.approx(reported, abs=1e-10)

    def test_superposition_roundtrip(self, tmp_path, capsys):
        sched = tmp_path / "s.txt"
        sched.write_text("J2PI at 1\nend at 2\n")
        state = tmp_path / "final.csv"
        rc, out = run(tmp_path, "simulate", "--n-atoms", "8", "--width", "4",
                      "--schedule", str(sched), "--initial", "superposition:1,0.5i,-0.5",
                      "--final-state", str(state))
        assert rc == 0
        _, cols = read_table(out)
        assert {"p_0", "p_1", "p_2"} <= set(cols)
        st = read_state(state)
        assert st.norm() == pytest.approx(1.0)
        assert "fidelity with initial state at t = 2:" in capsys.readouterr().out

    def test_malformed_schedule(self, tmp_path, capsys):
        sched = tmp_path / "bad.txt"
        sched.write_text("J0 at 5\nJ2PI at 3\nend at 9\n")
        rc, _ = run(tmp_path, "simulate", "--schedule", str(sched))
        assert rc == 2
        assert "line 2" in capsys.readouterr().err

    @pytest.mark.parametrize("argv", [
        ["simulate"],
        ["simulate", "--schedule", "/nonexistent/file"],
        ["simulate", "--t-end", "1", "--initial", "fock:x"],
        ["simulate", "--t-end", "1", "--initial", "superposition:1,abc"],
        ["simulate", "--t-end", "1", "--n-atoms", "0"],
    ])
    def test_input_errors(self, tmp_path, argv):
        rc, _ = run(tmp_path, *argv)
        assert rc == 2

    def test_deterministic(self, tmp_path):
        argv = ["simulate", "--t-end", "1", "--kind", "gaussian", "--n-atoms", "50",
                "--width", "20", "--seed", "7"]
        _, a = run(tmp_path, *argv, name="a.csv")
        _, b = run(tmp_path, *argv, name="b.csv")
        # headers differ only in the output path
        assert a.read_bytes().split(b"\n", 1)[1] == b.read_bytes().split(b"\n", 1)[1]


class TestOracle:
    def test_j0_value(self, tmp_path):
        rc, out = run(tmp_path, "oracle", "--gamma", "1", "--scenario", "j0", "--tau", "3",
                      "--t-end", "6", "--sample-dt", "0.01")
        assert rc == 0
        _, cols = read_table(out)
        assert cols["re_cph"][-1] == pytest.approx(-0.995042, abs=1e-6)

    def test_free_half_life(self, tmp_path):
        _, out = run(tmp_path, "oracle", "--gamma", "1", "--scenario", "free",
                     "--t-end", str(LN2), "--sample-dt", str(LN2 / 10))
        _, cols = read_table(out)
        assert cols["re_cph"][-1] == pytest.approx(0.5)

    def test_fast_zero_after_2td(self, tmp_path):
        _, out = run(tmp_path, "oracle", "--gamma", "1", "--scenario", "fast")
        _, cols = read_table(out)
        late = cols["t"] > LN2
        assert late.any() and np.all(cols["re_cph"][late] == 0)
        np.testing.assert_allclose(cols["norm"], 1, atol=1e-12)

    def test_errors(self, tmp_path):
        assert run(tmp_path, "oracle", "--gamma", "0", "--scenario", "free")[0] == 2
        assert run(tmp_path, "oracle", "--gamma", "1", "--scenario", "j0")[0] == 2
        with pytest.raises(SystemExit):
            main(["oracle", "--gamma", "1", "--scenario", "nope"])


class TestFig1:
    def test_default(self, tmp_path, capsys):
        rc, out = run(tmp_path, "fig1")
        assert rc == 0
        text = capsys.readouterr().out
        assert "max |c_ph| on (2, 5) tau_D" in text
        assert "emission activity" in text
        _, cols = read_table(out)
        assert cols["t"][-1] == pytest.approx(12 * LN2 / 2)

    def test_zero_width_warns(self, tmp_path, capsys):
        rc, _ = run(tmp_path, "fig1", "--width", "0", "--n-atoms", "10")
        assert rc in (0, 1)
        assert "warning" in capsys.readouterr().out


class TestSweep:
    GRID = [0.1, 0.2, 0.3, 0.35, 0.4, 0.5, 0.7, 1.0, 1.5, 2.0, 3.0]

    def test_j0_tracks_formula_and_minimum(self, tmp_path):
        axis = ",".join(map(str, self.GRID))
        rc, out = run(tmp_path, "sweep", "--protocol", "J0", "--gamma-tau", axis,
                      "--n-atoms", "1600", "--width", "400", "--jobs", "4")
        assert rc == 0
        _, cols = read_table(out)
        gt = cols["gamma_tau"]
        np.testing.assert_array_equal(gt, self.GRID)
        expected = 2 * np.exp(-2 * gt) - 1
        assert np.max(np.abs(cols["echo_amplitude"] - expected)) <= 0.02
        k = int(np.argmin(cols["echo_abs"]))
        assert abs(gt[k] - 0.5 * LN2) <= 0.05

    def test_j2pi_fidelity(self, tmp_path):
        rc, out = run(tmp_path, "sweep", "--protocol", "J2PI", "--gamma-tau", "0.1,1,3")
        assert rc == 0
        _, cols = read_table(out)
        assert np.all(cols["fidelity"] >= 0.999)

    def test_parallel_matches_serial(self, tmp_path):
        argv = ["sweep", "--gamma-tau", "0.3,0.6,0.9", "--n-atoms", "40", "--width", "20"]
        _, a = run(tmp_path, *argv, "--jobs", "3", name="a.csv")
        _, b = run(tmp_path, *argv, name="b.csv")
        assert a.read_bytes().split(b"\n", 1)[1] == b.read_bytes().split(b"\n", 1)[1]

    def test_bad_axis(self, tmp_path):
        assert run(tmp_path, "sweep", "--tau", "-1")[0] == 2
