import subprocess
import sys

import numpy as np
import pytest

from orderkin.cli import main
from orderkin.config import SCHEMA, parse_config, serialize_config
from orderkin.errors import ConfigurationError
from orderkin.runner import EXIT_CONFIG, EXIT_OK, EXIT_PROPERTY, fmt, render_csv, run_scenario

MINIMAL_RELAXATION = "scenario = relaxation\nrule = calamitic2d\nseed = 3\n"


def write(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def data_rows(path):
    return [l for l in open(path).read().splitlines() if l and not l.startswith("#")]


# -- parsing -------------------------------------------------------------------------


def test_minimal_relaxation_defaults():
    cfg = parse_config(MINIMAL_RELAXATION)
    assert cfg.manifold == "s1"
    assert cfg.n_particles == 1000 and cfg.kernel.prefactor_kind == "unit"
    assert cfg.kernel.majorant == "auto"


def test_incompatible_rule_manifold():
    with pytest.raises(ConfigurationError, match="rule"):
        parse_config("scenario = relaxation\nrule = calamitic3d\nmanifold = s1\nseed = 0\n")


def test_fig4_middle_round_trip():
    text = "scenario = alignment\nseed = 0\npotential.alpha = 1.0\npotential.beta = 1.0\n"
    cfg = parse_config(text)
    again = parse_config(serialize_config(cfg))
    assert (again.potential.alpha, again.potential.beta) == (1.0, 1.0)
    assert again == cfg
    assert serialize_config(again) == serialize_config(cfg)


@pytest.mark.parametrize("value", ["0.1", "1e-300", "0.30000000000000004", "123456.789"])
def test_float_round_trip_is_exact(value):
    cfg = parse_config(f"scenario = alignment\nseed = 0\ndt = {value}\n")
    assert parse_config(serialize_config(cfg)).dt == float(value)


def test_all_violations_reported_with_keys():
    with pytest.raises(ConfigurationError) as exc:
        parse_config("scenario = relaxation\nrule = calamitic2d\nbogus = 1\npotential.gamma = 2\n")
    msg = str(exc.value)
    for key in ("bogus", "potential.gamma", "seed"):
        assert key in msg


def test_invariant_violations():
    with pytest.raises(ConfigurationError, match="dt"):
        parse_config("scenario = alignment\nseed = 0\ndt = 0\n")
    with pytest.raises(ConfigurationError, match="n_particles"):
        parse_config("scenario = weakform\nrule = calamitic2d\nseed = 0\nn_particles = 1\n")
    with pytest.raises(ConfigurationError, match="dt"):
        parse_config("scenario = alignment\nseed = 0\ndt = abc\n")
    with pytest.raises(ConfigurationError, match="scenario"):
        parse_config("scenario = movie\nseed = 0\n")


def test_comments_and_quotes():
    cfg = parse_config("# comment\nscenario = alignment\n; other\nseed = 0\noutput_path = \"a b.csv\"\n")
    assert cfg.output_path == "a b.csv"


def test_schema_covers_documented_keys():
    for key in ("scenario", "manifold", "rule", "n_particles", "dt", "t_end", "checkpoint_every", "seed",
                "potential.kind", "potential.alpha", "potential.beta", "potential.theta_hat",
                "kernel.prefactor_kind", "kernel.majorant", "output_path"):
        assert key in SCHEMA


# -- running -------------------------------------------------------------------------


def test_alignment_final_row(tmp_path):
    out = tmp_path / "a.csv"
    cfg = parse_config(f"scenario = alignment\nseed = 0\npotential.alpha = 1\npotential.beta = 1\noutput_path = {out}\n")
    res = run_scenario(cfg)
    assert res.status == EXIT_OK
    header = open(out).read().splitlines()
    assert header[0].startswith("# schema: orderkin-csv/1")
    assert any(l.startswith("# seed: 0") for l in header)
    assert any(l.startswith("# build: ") for l in header)
    cols = data_rows(out)[0].split(",")
    last = dict(zip(cols, map(float, data_rows(out)[-1].split(","))))
    assert abs(last["mean_theta"] - 0.4) < 0.02


def test_csv_uses_17_significant_digits():
    assert fmt(0.1) == "0.10000000000000001"
    assert fmt(3) == "3"
    cfg = parse_config("scenario = alignment\nseed = 0\n")
    text = render_csv(cfg, ["a", "b"], [[1.0 / 3.0, 2]])
    assert text.endswith("a,b\n0.33333333333333331,2\n")


def test_same_seed_byte_identical(tmp_path):
    text = "scenario = relaxation\nrule = calamitic2d\nn_particles = 1000\nt_end = 1\ndt = 0.05\ncheckpoint_every = 5\nseed = 4\n"
    out = tmp_path / "r.csv"
    cfg = parse_config(text + f"output_path = {out}\n")
    blobs = []
    for threads in (1, 3):
        assert run_scenario(cfg, threads=threads).status == EXIT_OK
        blobs.append(out.read_bytes())
    assert blobs[0] == blobs[1]


def test_invariant_fuzz_small(tmp_path):
    text = f"scenario = invariant_fuzz\nrule = headtail2d\nn_particles = 500\nfuzz.events = 20000\nseed = 1\noutput_path = {tmp_path / 'f.csv'}\n"
    res = run_scenario(parse_config(text))
    assert res.status == EXIT_OK
    assert max(max(r[4:7]) for r in res.rows) < 1e-8


def test_weakform_detects_non_invariant():
    text = ("scenario = weakform\nrule = calamitic2d\nn_particles = 2000\nweakform.samples = 100000\n"
            "weakform.psi = one,px,E,px2\ninit.kind = anisotropic\nseed = 2\noutput_path = \n")
    res = run_scenario(parse_config(text))
    assert res.status == EXIT_OK
    assert [r[4] for r in res.rows] == [True] * 4


def test_property_failure_reports_reason(tmp_path):
    # an invariant test deliberately marked as expected-nonzero cannot pass on the isotropic data
    text = ("scenario = weakform\nrule = calamitic2d\nn_particles = 2000\nweakform.samples = 20000\n"
            "weakform.psi = px2\ninit.kind = maxwellian\nseed = 2\noutput_path = \n")
    res = run_scenario(parse_config(text))
    assert res.status == EXIT_PROPERTY
    assert res.reason.startswith("reason=weak_form")


# -- CLI -------------------------------------------------------------------------------


def test_cli_stability(capsys):
    assert main(["stability", "--alpha", "1", "--beta", "1"]) == EXIT_OK
    out, err = capsys.readouterr()
    assert "stable_spiral" in out
    assert err.strip().splitlines()[-1] == "RESULT: PASS"


def test_cli_config_error(tmp_path, capsys):
    path = write(tmp_path, "scenario = relaxation\nrule = calamitic3d\nmanifold = s1\nseed = 0\n")
    assert main(["simulate", path]) == EXIT_CONFIG
    err = capsys.readouterr().err
    assert err.strip().splitlines()[-1].startswith("RESULT: FAIL reason=")


def test_cli_missing_file(tmp_path, capsys):
    assert main(["simulate", str(tmp_path / "nope.cfg")]) == 3
    assert "RESULT: FAIL reason=io" in capsys.readouterr().err


def test_cli_property_failure_exit(tmp_path, capsys):
    path = write(tmp_path, "scenario = weakform\nrule = calamitic2d\nn_particles = 2000\nweakform.samples = 20000\n"
                 "weakform.psi = px2\ninit.kind = maxwellian\nseed = 2\n")
    assert main(["weakform", path, "--out", str(tmp_path / "w.csv")]) == EXIT_PROPERTY
    assert "RESULT: FAIL reason=weak_form" in capsys.readouterr().err


def test_cli_overrides_and_forced_scenario(tmp_path):
    path = write(tmp_path, "scenario = relaxation\nrule = calamitic2d\nn_particles = 1000\nfuzz.events = 3000\nseed = 0\n")
    out = tmp_path / "inv.csv"
    assert main(["invariants", path, "--seed", "9", "--out", str(out), "--threads", "2"]) == EXIT_OK
    text = out.read_text()
    assert "scenario=invariant_fuzz" in text and "# seed: 9" in text


def test_cli_subprocess_determinism(tmp_path):
    path = write(tmp_path, "scenario = alignment\nn_particles = 200\nt_end = 2\nseed = 5\n")
    outs = []
    out = tmp_path / "s.csv"
    for _ in range(2):
        proc = subprocess.run([sys.executable, "-m", "orderkin", "simulate", path, "--out", str(out)],
                              capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
        assert proc.stderr.strip().splitlines()[-1] == "RESULT: PASS"
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    rows = [l for l in outs[0].decode().splitlines() if not l.startswith("#")]
    t = np.array([float(r.split(",")[0]) for r in rows[1:]])
    assert np.all(np.diff(t) > 0)
