from __future__ import annotations

import json
from pathlib import Path

import pytest

from toeplab.cli import COMMANDS, RunConfig, build_parser, main, parse_complex
from toeplab.errors import ConfigError

GOLDEN = Path(__file__).parent / "golden" / "help.txt"
THREE_TERM = "2i*z^-1 + z^2 + 7/10*z^3"


def render_help() -> str:
    parser = build_parser()
    parts = [parser.format_help()]
    sub = next(a for a in parser._actions if a.dest == "command")
    for name in COMMANDS:
        parts.append(sub.choices[name].format_help())
    return "\n".join(parts)


def run_cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_help_matches_golden_file():
    assert render_help() == GOLDEN.read_text(encoding="utf-8")


def test_help_documents_grammar_and_flags():
    text = render_help()
    for needle in ("symbol grammar", "7/10", "z^-3", "disk:cx,cy,r", "tube:tau", "--seed", "--dump-config",
                   "--check-factorization", "--convention"):
        assert needle in text
    for name in COMMANDS:
        assert name in text


def test_parse_complex_forms():
    assert parse_complex("1+1i") == 1 + 1j
    assert parse_complex("-0.5") == -0.5
    assert parse_complex("2j") == 2j
    assert parse_complex("i") == 1j
    assert parse_complex("3-i") == 3 - 1j
    with pytest.raises(ConfigError):
        parse_complex("one")


def test_config_rejects_unknown_keys():
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"colour": "red"})


def test_circulant_spectrum_of_shift(capsys):
    code, out, _ = run_cli(capsys, "spectrum", "--symbol", "z", "--n", "4", "--circulant")
    assert code == 0
    vals = [complex(line.replace(" ", "").replace("i", "j")) for line in out.splitlines()]
    assert len(vals) == 4
    for target in (1, 1j, -1, -1j):
        assert min(abs(v - target) for v in vals) < 1e-12


def test_toeplitz_spectrum(capsys):
    code, out, _ = run_cli(capsys, "spectrum", "--symbol", "z", "--n", "5")
    assert code == 0 and len(out.splitlines()) == 5


def test_grushin_check(capsys):
    code, out, _ = run_cli(capsys, "grushin", "--symbol", THREE_TERM, "--n", "32", "--z", "1+1i",
                           "--check-factorization")
    assert code == 0
    fields = dict(item.split("=") for item in out.split())
    assert abs(float(fields["lhs"]) - float(fields["rhs"])) <= 1e-8 * max(1, abs(float(fields["lhs"])))
    assert float(fields["|lhs-rhs|"]) <= 1e-8 * max(1, abs(float(fields["lhs"])))


def test_kernel_command(capsys):
    code, out, _ = run_cli(capsys, "kernel", "--symbol", "z", "--convention", "direct", "--n", "60",
                           "--z", "2", "--nu", "3,-1")
    assert code == 0
    lines = out.splitlines()
    assert lines[0].startswith("nu=3") and "K_inf=-0.0625" in lines[0]


def test_quasimode_command(capsys):
    # a_1 = 1 has index -1 inside the unit circle, a_-1 = 1 has index +1; both decay like 0.5^N
    code, out, _ = run_cli(capsys, "quasimode", "--symbol", "z", "--convention", "direct", "--n", "20",
                           "--z", "0.5")
    assert code == 0 and "side=minus" in out
    assert float(out.split("residual=")[1]) == pytest.approx(8.259e-7, rel=1e-3)
    code, out, _ = run_cli(capsys, "quasimode", "--symbol", "z^-1", "--convention", "direct", "--n", "20",
                           "--z", "0.5")
    assert code == 0 and "side=plus" in out
    assert float(out.split("residual=")[1]) == pytest.approx(8.259e-7, rel=1e-3)


def test_quasimode_at_index_zero_fails(capsys):
    code, _, err = run_cli(capsys, "quasimode", "--symbol", "z", "--convention", "direct", "--n", "20",
                           "--z", "2")
    assert code == 3 and "WrongIndexSign" in err


def test_weyl_outputs(tmp_path, capsys):
    code, out, _ = run_cli(capsys, "weyl", "--symbol", THREE_TERM, "--n", "60", "--delta", "1e-10",
                           "--region", "disk:0,0,1.5", "--trials", "2", "--seed", "42", "--emit", "jsonl,csv,svg",
                           "--out", str(tmp_path))
    assert code == 0
    assert len(out.splitlines()) == 2
    recs = [json.loads(line) for line in (tmp_path / "weyl.jsonl").read_text().splitlines()]
    assert [r["trial_index"] for r in recs] == [0, 1] and recs[0]["master_seed"] == 42
    assert (tmp_path / "weyl_eigs_0.csv").exists() and (tmp_path / "weyl_0.svg").exists()


def test_dump_config_round_trip(tmp_path, capsys):
    first, second = tmp_path / "a", tmp_path / "b"
    cfg = tmp_path / "cfg.json"
    args = ["montecarlo", "--symbol", THREE_TERM, "--n", "40", "--delta", "1e-12,1e-10", "--region", "plane",
            "--trials", "2", "--seed", "5"]
    assert run_cli(capsys, *args, "--out", str(first), "--dump-config", str(cfg))[0] == 0
    assert run_cli(capsys, "montecarlo", "--config", str(cfg), "--out", str(second))[0] == 0
    assert (first / "montecarlo.jsonl").read_bytes() == (second / "montecarlo.jsonl").read_bytes()


def test_flags_override_config(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"symbol": "z", "n": [4], "circulant": True}))
    code, out, _ = run_cli(capsys, "spectrum", "--config", str(cfg), "--n", "6")
    assert code == 0 and len(out.splitlines()) == 6


def test_montecarlo_requires_seed(capsys):
    code, _, err = run_cli(capsys, "montecarlo", "--symbol", "z", "--n", "10")
    assert code == 2 and "--seed" in err


def test_parse_error_exit_code(capsys):
    code, _, err = run_cli(capsys, "spectrum", "--symbol", "2 + * z", "--n", "10")
    assert code == 2 and "ParseError" in err


def test_unknown_config_key_exit_code(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"symbol": "z", "speed": 3}))
    assert run_cli(capsys, "spectrum", "--config", str(cfg))[0] == 2


def test_small_N_is_config_error(capsys):
    code, _, err = run_cli(capsys, "spectrum", "--symbol", THREE_TERM, "--n", "3")
    assert code == 2 and "N >=" in err


def test_numerical_failure_exit_code(capsys):
    # z = 1 is an eigenvalue of the size-4 shift circulant
    code, _, err = run_cli(capsys, "kernel", "--symbol", "z", "--n", "3", "--z", "1")
    assert code == 3 and "OnSpectrum" in err


def test_pseudo_and_potential(tmp_path, capsys):
    code, out, _ = run_cli(capsys, "pseudo", "--symbol", THREE_TERM, "--n", "20", "--nx", "3", "--ny", "2",
                           "--out", str(tmp_path))
    assert code == 0 and (tmp_path / "pseudo.csv").exists() and (tmp_path / "pseudo.json").exists()
    code, out, _ = run_cli(capsys, "potential", "--symbol", THREE_TERM, "--n", "60", "--delta", "1e-12",
                           "--probes", "4+4i;-4", "--seed", "1")
    assert code == 0 and len(out.splitlines()) == 2


def test_no_command_prints_help(capsys):
    code, out, _ = run_cli(capsys)
    assert code == 2 and "symbol grammar" in out
