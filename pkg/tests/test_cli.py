import pytest

from adaquery.cli import main


def spec_file(tmp_path, bug_lines=()):
    lines = ["[typing]", "dynamic", "", "[supported]", "*"]
    if bug_lines:
        lines += ["", "[bugs]", *bug_lines]
    path = tmp_path / "dialect.txt"
    path.write_text("\n".join(lines) + "\n")
    return str(path)


def run_args(tmp_path, target, out="out", **extra):
    args = [
        "run", "--target", target, "--out", str(tmp_path / out),
        "--budget", "400", "--interval-i", "200", "--seed", "3",
    ]
    for flag, value in extra.items():
        args.append(f"--{flag.replace('_', '-')}")
        if value is not None:
            args.append(str(value))
    return args


def test_run_requires_target_and_out(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["run", "--out", "somewhere"])
    assert exc.value.code == 2
    assert "--target" in capsys.readouterr().err


def test_unknown_command_exits_with_usage_error():
    with pytest.raises(SystemExit):
        main(["frobnicate"])


def test_clean_run_exits_zero(tmp_path, capsys):
    code = main(run_args(tmp_path, f"mock:{spec_file(tmp_path)}"))
    out = capsys.readouterr().out
    assert code == 0
    assert "statements executed:" in out
    assert "bugs: 0" in out
    assert (tmp_path / "out" / "metrics.tsv").is_file()


def test_buggy_run_exits_one(tmp_path, capsys):
    target = f"mock:{spec_file(tmp_path, bug_lines=['filter_null_true WHERE'])}"
    code = main(run_args(tmp_path, target))
    out = capsys.readouterr().out
    assert code == 1
    assert "new" in out and "duplicates" in out


def test_bad_target_exits_two(tmp_path, capsys):
    code = main(run_args(tmp_path, "mock:/nonexistent/spec.txt"))
    assert code == 2
    assert "fatal:" in capsys.readouterr().err


def test_recheck_reports_reproductions(tmp_path, capsys):
    target = f"mock:{spec_file(tmp_path, bug_lines=['filter_null_true WHERE'])}"
    assert main(run_args(tmp_path, target)) == 1
    capsys.readouterr()
    code = main(["recheck", "--out", str(tmp_path / "out"), "--target", target])
    out = capsys.readouterr().out
    assert code == 0
    assert "bug-0001: was Fail, replay Fail" in out
    assert "reproductions still fail" in out


def test_stats_command_prints_table(tmp_path, capsys):
    target = f"mock:{spec_file(tmp_path)}"
    stats = tmp_path / "stats.tsv"
    assert main(run_args(tmp_path, target, stats=stats)) == 0
    capsys.readouterr()
    code = main(["stats", "--stats", str(stats)])
    out = capsys.readouterr().out
    assert code == 0
    assert out.splitlines()[0].split() == ["feature", "executions", "successes", "state"]
    assert "SELECT" in out


def test_stats_command_missing_file_exits_two(tmp_path, capsys):
    code = main(["stats", "--stats", str(tmp_path / "missing.tsv")])
    assert code == 2
    assert "fatal:" in capsys.readouterr().err


def test_typing_flag_accepted(tmp_path):
    target = f"mock:{spec_file(tmp_path)}"
    assert main(run_args(tmp_path, target, typing="static")) == 0
