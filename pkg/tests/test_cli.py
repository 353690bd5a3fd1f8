import re
from pathlib import Path

import numpy as np
import pytest

from pppmix.cli import main
from pppmix.model import read_dataset
from pppmix.sampler import SampleStore

DATA_DIR = Path(__file__).resolve().parent.parent / "data"

SIM_FLAGS = [
    "simulate", "--k", "2", "--means", "0,2", "--sds", "1,1",
    "--weights", "0.5,0.5", "--n", "100", "--seed", "7",
]


def run(argv):
    return main([str(a) for a in argv])


def test_simulate_writes_csv(tmp_path, capsys):
    out = tmp_path / "sim.csv"
    assert run(SIM_FLAGS + ["--out", out]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "y"
    assert len(lines) == 101
    data = read_dataset(out)
    assert data.n == 100


def test_simulate_byte_determinism(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(SIM_FLAGS + ["--out", a]) == 0
    assert run(SIM_FLAGS + ["--out", b]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_simulate_validation_errors(tmp_path, capsys):
    out = tmp_path / "x.csv"
    assert run(["simulate", "--k", "2", "--means", "0,2", "--sds", "1,1",
                "--weights", "0.5,0.5", "--n", "0", "--seed", "1", "--out", out]) == 1
    assert run(["simulate", "--k", "2", "--means", "0,2,4", "--sds", "1,1",
                "--weights", "0.5,0.5", "--n", "10", "--seed", "1", "--out", out]) == 1
    assert run(["simulate", "--k", "2", "--means", "0,2", "--sds", "1,1",
                "--weights", "0.6,0.5", "--n", "10", "--seed", "1", "--out", out]) == 1
    capsys.readouterr()


@pytest.fixture(scope="module")
def small_dataset(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "sim.csv"
    assert run(SIM_FLAGS + ["--out", path]) == 0
    return path


@pytest.fixture(scope="module")
def small_fit(tmp_path_factory, small_dataset):
    prefix = tmp_path_factory.mktemp("fit") / "run"
    code = run(["fit", "--data", small_dataset, "--k", "2", "--penalty", "absdiff:mu:s=1",
                "--iters", "800", "--burnin", "200", "--thin", "2", "--seed", "5",
                "--out", prefix])
    assert code == 0
    return prefix


def test_fit_outputs(small_fit):
    samples = Path(f"{small_fit}_chain1.csv")
    report = Path(f"{small_fit}_report.txt")
    assert samples.exists() and report.exists()
    store = SampleStore.from_csv(samples)
    assert store.records == 300
    text = report.read_text()
    assert "penalty=absdiff:mu:s=1.0" in text
    assert re.search(r"wall_time_s=\d", text)
    assert "acceptance_rate_mu_chain1=" in text


def test_fit_s0_equals_none_acceptance(small_dataset, tmp_path):
    prefix = tmp_path / "s0"
    assert run(["fit", "--data", small_dataset, "--k", "2", "--penalty", "absdiff:mu:s=0",
                "--iters", "400", "--burnin", "100", "--thin", "1", "--seed", "3",
                "--out", prefix]) == 0
    report = Path(f"{prefix}_report.txt").read_text()
    assert "acceptance_rate_mu_chain1=1.0\n" in report


def test_fit_malformed_penalty_names_grammar(small_dataset, tmp_path, capsys):
    assert run(["fit", "--data", small_dataset, "--k", "2", "--penalty", "absdiff:mu",
                "--iters", "100", "--burnin", "10", "--out", tmp_path / "x"]) == 1
    err = capsys.readouterr().err
    assert "none | absdiff" in err


def test_fit_missing_data_file_is_runtime_error(tmp_path, capsys):
    assert run(["fit", "--data", tmp_path / "nope.csv", "--k", "2",
                "--iters", "100", "--burnin", "10", "--out", tmp_path / "x"]) == 2
    capsys.readouterr()


def test_fit_maxmin_penalty_rejected(small_dataset, tmp_path, capsys):
    assert run(["fit", "--data", small_dataset, "--k", "2", "--penalty", "maxmin",
                "--iters", "100", "--burnin", "10", "--out", tmp_path / "x"]) == 1
    capsys.readouterr()


def test_fit_multi_chain(small_dataset, tmp_path):
    prefix = tmp_path / "mc"
    assert run(["fit", "--data", small_dataset, "--k", "2", "--chains", "2",
                "--iters", "300", "--burnin", "100", "--thin", "1", "--seed", "9",
                "--out", prefix]) == 0
    s1 = SampleStore.from_csv(f"{prefix}_chain1.csv")
    s2 = SampleStore.from_csv(f"{prefix}_chain2.csv")
    assert s1.records == s2.records == 200
    assert not np.array_equal(s1.means, s2.means)  # distinct seeds


def test_fit_byte_determinism(small_dataset, tmp_path):
    pa, pb = tmp_path / "da", tmp_path / "db"
    flags = ["fit", "--data", small_dataset, "--k", "2", "--penalty", "absdiff:mu:s=1",
             "--iters", "400", "--burnin", "100", "--thin", "2", "--seed", "21"]
    assert run(flags + ["--out", pa]) == 0
    assert run(flags + ["--out", pb]) == 0
    assert Path(f"{pa}_chain1.csv").read_bytes() == Path(f"{pb}_chain1.csv").read_bytes()
    # report is identical apart from the wall-time line and the echoed paths
    strip = lambda p: [
        ln for ln in Path(f"{p}_report.txt").read_text().splitlines()
        if not ln.startswith(("wall_time_s=", "samples_chain"))
    ]
    assert strip(pa) == strip(pb)


def test_analyze_outputs_and_roundtrip(small_fit, tmp_path):
    prefix = tmp_path / "an"
    samples = f"{small_fit}_chain1.csv"
    code = run(["analyze", "--samples", samples, "--relabel", "ic-mu",
                "--kde", "mu_pooled", "--kde", "gap_mu_2_1",
                "--grid2d", "absdiff_mu:max_sigma2",
                "--tailprob", "absdiff_mu<0.5", "--tailprob", "max_sigma2>2",
                "--bandwidth", "auto", "--out-prefix", prefix])
    assert code == 0
    assert Path(f"{prefix}_kde_mu_pooled.csv").exists()
    assert Path(f"{prefix}_kde_gap_mu_2_1.csv").exists()
    assert Path(f"{prefix}_grid2d_absdiff_mu_max_sigma2.csv").exists()
    summary = Path(f"{prefix}_summary.txt").read_text()
    assert "tailprob[absdiff_mu<0.5]=" in summary
    assert "kde_mu_pooled_modes=" in summary
    # every header column is addressable
    header = Path(samples).read_text().splitlines()[0]
    prefix2 = tmp_path / "an2"
    kde_flags = []
    for col in header.split(","):
        kde_flags += ["--kde", col]
    assert run(["analyze", "--samples", samples] + kde_flags +
               ["--out-prefix", prefix2]) == 0


def test_analyze_unknown_column(small_fit, tmp_path, capsys):
    assert run(["analyze", "--samples", f"{small_fit}_chain1.csv",
                "--kde", "mu_7", "--out-prefix", tmp_path / "x"]) == 2
    capsys.readouterr()


def test_analyze_byte_determinism_and_svg(small_fit, tmp_path):
    args = ["analyze", "--samples", f"{small_fit}_chain1.csv", "--relabel", "ic-mu",
            "--kde", "mu_pooled", "--svg"]
    pa, pb = tmp_path / "a", tmp_path / "b"
    assert run(args + ["--out-prefix", pa]) == 0
    assert run(args + ["--out-prefix", pb]) == 0
    assert Path(f"{pa}_kde_mu_pooled.csv").read_bytes() == Path(f"{pb}_kde_mu_pooled.csv").read_bytes()
    assert Path(f"{pa}_kde_mu_pooled.svg").read_bytes() == Path(f"{pb}_kde_mu_pooled.svg").read_bytes()
    assert Path(f"{pa}_kde_mu_pooled.svg").read_text().startswith("<svg")


def test_config_file_merge_flag_dominant(tmp_path, small_dataset):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        "k=2\niters=300\nburnin=100\nthin=1\nseed=4\npenalty=absdiff:mu:s=1\n"
        f"data={small_dataset}\n# comment line\nxi=1.0\n"
    )
    p1, p2 = tmp_path / "r1", tmp_path / "r2"
    assert run(["fit", "--config", cfg, "--out", p1]) == 0
    # flags beat the file: seed overridden, config otherwise identical
    assert run(["fit", "--config", cfg, "--seed", "4", "--out", p2]) == 0
    assert Path(f"{p1}_chain1.csv").read_bytes() == Path(f"{p2}_chain1.csv").read_bytes()
    report = Path(f"{p1}_report.txt").read_text()
    assert "xi=1.0" in report  # config override echoed


def test_config_unknown_key_rejected(tmp_path, small_dataset, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text(f"data={small_dataset}\nk=2\nbogus=1\n")
    assert run(["fit", "--config", cfg, "--out", tmp_path / "x"]) == 1
    capsys.readouterr()


def test_oracle_cli_small_run(tmp_path):
    data = tmp_path / "six.csv"
    data.write_text("y\n-0.4\n0.1\n0.4\n1.6\n1.9\n2.4\n")
    prefix = tmp_path / "orc"
    code = run(["oracle", "--data", data, "--penalty", "none",
                "--grid=-3:5:41", "--iters", "4000", "--burnin", "500", "--thin", "1",
                "--rw-steps", "20000", "--rw-step", "0.5", "--seed", "3",
                "--tv-budget-chain", "1.0", "--tv-budget-rw", "1.0",
                "--xi", "1.0", "--kappa", "4.0",
                "--out-prefix", prefix])
    assert code == 0
    report = Path(f"{prefix}_report.txt").read_text()
    assert "result_chain=PASS" in report and "result_rw=PASS" in report
    for part in ("grid", "chain", "rw"):
        assert Path(f"{prefix}_{part}.csv").exists()


def test_oracle_cli_budget_violation_exit_code(tmp_path, capsys):
    data = tmp_path / "six.csv"
    data.write_text("y\n-0.4\n0.1\n0.4\n1.6\n1.9\n2.4\n")
    code = run(["oracle", "--data", data, "--penalty", "none",
                "--grid=-3:5:41", "--iters", "500", "--burnin", "50", "--thin", "1",
                "--rw-steps", "2000", "--rw-step", "0.5", "--seed", "3",
                "--tv-budget-chain", "0.001", "--tv-budget-rw", "0.001",
                "--out-prefix", tmp_path / "orc2"])
    assert code == 3
    capsys.readouterr()


def test_unknown_subcommand_exits_validation(capsys):
    assert run(["frobnicate"]) == 1
    capsys.readouterr()
