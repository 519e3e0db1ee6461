import re

import numpy as np

import taskcov as tc
from taskcov.cli import cli_main


def run(capsys, *argv):
    code = cli_main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def parse_correlations(out):
    lines = out.splitlines()
    start = lines.index("task correlation matrix:") + 1
    rows = []
    for line in lines[start:]:
        if not line.startswith("  "):
            break
        rows.append([float(v) for v in line.split()[1:]])
    return np.array(rows)


def test_make_toy_then_train(tmp_path, capsys):
    data = tmp_path / "toy.csv"
    code, out, err = run(capsys, "make-toy", "--seed", "35", "--out", str(data))
    assert code == 0 and "3 tasks" in out
    code, out, err = run(
        capsys, "train", str(data), "--l1", "0.01", "--l2", "0.005", "--kernel", "linear"
    )
    assert code == 0, err
    corr = parse_correlations(out)
    assert corr.shape == (3, 3)
    assert corr[0, 1] <= -0.95
    assert "objective trace:" in out


def test_make_toy_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    run(capsys, "make-toy", "--seed", "11", "--out", str(a))
    run(capsys, "make-toy", "--seed", "11", "--out", str(b))
    assert a.read_bytes() == b.read_bytes()


def test_train_save_predict_eval_round_trip(tmp_path, capsys):
    data = tmp_path / "toy.csv"
    model_path = tmp_path / "model.txt"
    run(capsys, "make-toy", "--seed", "35", "--out", str(data))
    code, out, _ = run(capsys, "train", str(data), "--out", str(model_path))
    assert code == 0 and model_path.exists()

    queries = tmp_path / "queries.csv"
    queries.write_text("task,x1\ntask1,0.0\ntask2,1.0\n")
    code, out, _ = run(capsys, "predict", "--model", str(model_path), str(queries))
    assert code == 0
    lines = out.strip().splitlines()
    assert len(lines) == 2 and lines[0].startswith("task1,")

    code, out_eval, _ = run(capsys, "eval", "--model", str(model_path), str(data))
    assert code == 0
    assert "explained variance" in out_eval

    # a saved-then-loaded model evaluates identically
    reloaded = tmp_path / "model2.txt"
    tc.save_model(tc.load_model(model_path), reloaded)
    code, out_eval2, _ = run(capsys, "eval", "--model", str(reloaded), str(data))
    assert out_eval2 == out_eval


def test_predict_unknown_task_fails_cleanly(tmp_path, capsys):
    data = tmp_path / "toy.csv"
    model_path = tmp_path / "model.txt"
    run(capsys, "make-toy", "--seed", "35", "--out", str(data))
    run(capsys, "train", str(data), "--out", str(model_path))
    queries = tmp_path / "queries.csv"
    queries.write_text("task,x1\nnope,0.0\n")
    code, out, err = run(capsys, "predict", "--model", str(model_path), str(queries))
    assert code != 0
    assert err.count("\n") == 1
    assert re.match(r"error: UnknownTask: ", err)


def test_cv_singleton_grid(tmp_path, capsys):
    data = tmp_path / "toy.csv"
    run(capsys, "make-toy", "--seed", "35", "--out", str(data))
    code, out, _ = run(
        capsys, "cv", str(data), "--l1", "0.01", "--l2", "0.005", "--folds", "5", "--seed", "3"
    )
    assert code == 0
    assert "chosen: l1=0.01 l2=0.005" in out


def test_cv_deterministic_reports(tmp_path, capsys):
    data = tmp_path / "toy.csv"
    run(capsys, "make-toy", "--seed", "35", "--out", str(data))
    args = ["cv", str(data), "--l1", "0.01,0.1", "--l2", "0.005", "--seed", "8"]
    code1, out1, _ = run(capsys, *args)
    code2, out2, _ = run(capsys, *args)
    assert code1 == code2 == 0
    assert out1 == out2


def test_new_task_command(tmp_path, capsys):
    rng = np.random.default_rng(12)
    base = tmp_path / "base.csv"
    rows = ["task,y,x1,x2"]
    w = {"a": np.array([1.0, -1.0]), "b": np.array([0.8, -1.2])}
    for tid, wt in w.items():
        for _ in range(15):
            x = rng.normal(size=2)
            rows.append(f"{tid},{float(wt @ x + 0.05 * rng.normal())!r},{float(x[0])!r},{float(x[1])!r}")
    base.write_text("\n".join(rows) + "\n")
    model_path = tmp_path / "model.txt"
    code, _, err = run(capsys, "train", str(base), "--l1", "0.05", "--l2", "0.05",
                       "--out", str(model_path))
    assert code == 0, err

    new = tmp_path / "new.csv"
    rows = ["task,y,x1,x2"]
    for _ in range(15):
        x = rng.normal(size=2)
        rows.append(f"c,{float(w['a'] @ x + 0.05 * rng.normal())!r},{float(x[0])!r},{float(x[1])!r}")
    new.write_text("\n".join(rows) + "\n")
    code, out, err = run(capsys, "new-task", "--model", str(model_path), str(new),
                         "--l1", "0.05", "--l2", "0.05")
    assert code == 0, err
    assert "new-task variance:" in out
    assert "covariance column:" in out


def test_new_task_rejects_existing_id(tmp_path, capsys):
    data = tmp_path / "toy.csv"
    model_path = tmp_path / "model.txt"
    run(capsys, "make-toy", "--seed", "35", "--out", str(data))
    run(capsys, "train", str(data), "--out", str(model_path))
    clash = tmp_path / "clash.csv"
    clash.write_text("task,y,x1\ntask1,1.0,2.0\ntask1,2.0,3.0\n")
    code, _, err = run(capsys, "new-task", "--model", str(model_path), str(clash))
    assert code == 1 and err.startswith("error: DuplicateTaskId:")


def test_train_reports_iteration_cap(tmp_path, capsys):
    data = tmp_path / "toy.csv"
    run(capsys, "make-toy", "--seed", "35", "--out", str(data))
    code, out, _ = run(capsys, "train", str(data), "--max-iters", "1")
    assert code == 0
    assert out.startswith("hit the iteration cap at 1 iterations")


def test_prior_train(tmp_path, capsys):
    data = tmp_path / "toy.csv"
    run(capsys, "make-toy", "--seed", "35", "--out", str(data))
    spec = tmp_path / "prior.spec"
    spec.write_text("kind=mean\n")
    code, out, err = run(capsys, "prior-train", str(data), "--prior", str(spec))
    assert code == 0, err
    assert "task correlation matrix:" in out

    spec.write_text("kind=network\nedges=0-1,1-2\n")
    code, out, _ = run(capsys, "prior-train", str(data), "--prior", str(spec))
    assert code == 0

    spec.write_text("kind=clustered\nclusters=a,a,b\nalpha=1.0\nbeta=0.5\ngamma=0.7\n")
    code, out, _ = run(capsys, "prior-train", str(data), "--prior", str(spec))
    assert code == 0

    spec.write_text("kind=unknown\n")
    code, _, err = run(capsys, "prior-train", str(data), "--prior", str(spec))
    assert code == 1 and err.startswith("error: ParseError:")


def test_missing_file_fails_cleanly(capsys):
    code, _, err = run(capsys, "train", "/nonexistent/data.csv")
    assert code == 1
    assert err.startswith("error: FileNotFoundError:")


def test_usage_error_single_line(capsys):
    code, _, err = run(capsys, "train")
    assert code == 2
    assert err.count("\n") == 1 and err.startswith("error: usage:")
