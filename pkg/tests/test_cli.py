import math

import numpy as np
import pytest

from disclapmix import io
from disclapmix.cli import main
from disclapmix.disclap import mle


def run(*argv):
    return main([str(a) for a in argv])


def exit_code(*argv):
    with pytest.raises(SystemExit) as err:
        run(*argv)
    return err.value.code


def small_population(path, seed=1, shift="14,12,28"):
    assert run("simulate", "--g", 30, "--k", 2000, "--r", 3, "--mu-range", "0.005:0.03",
               "--shift", shift, "--seed", seed, "--quiet", "--out", path) == 0


def test_simulate_founders(tmp_path, capsys):
    out = tmp_path / "pop.csv"
    assert run("simulate", "--g", 0, "--k", 10, "--r", 2, "--mu", "0,0", "--seed", 1, "--out", out) == 0
    assert out.read_text() == "Locus1,Locus2,N\n0,0,10\n"
    text = capsys.readouterr().out
    assert "individuals: 10" in text and "unique haplotypes: 1" in text


def test_simulate_shift_and_determinism(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    small_population(a)
    small_population(b)
    assert a.read_bytes() == b.read_bytes()
    t = io.read_population(a)
    assert t.as_dict().get((14, 12, 28), 0) > 0


def test_simulate_flag_errors(tmp_path):
    out = tmp_path / "p.csv"
    assert exit_code("simulate", "--g", 1, "--k", 10, "--r", 2, "--mu", "0.1", "--out", out) == 2
    assert exit_code("simulate", "--g", 1, "--k", 10, "--r", 2, "--mu", "0.1,2", "--out", out) == 2
    assert exit_code("simulate", "--g", 1, "--k", 10, "--r", 2, "--mu", "0,0", "--shift", "1", "--out", out) == 2
    assert exit_code("simulate", "--g", 1, "--k", 10, "--r", 2, "--out", out) == 2
    assert not out.exists()


def test_simulate_extinction(tmp_path, capsys):
    out = tmp_path / "p.csv"
    code = run("simulate", "--g", 500, "--k", 1, "--r", 1, "--mu", "0", "--alpha", 0.5, "--out", out)
    assert code == 3
    assert "generation" in capsys.readouterr().err
    assert not out.exists()


def test_sample_single(tmp_path, capsys):
    pop = tmp_path / "pop.csv"
    pop.write_text("A,B,N\n4,7,3\n")
    out = tmp_path / "ds.csv"
    assert run("sample", "--pop", pop, "--n", 5, "--out", out) == 0
    assert out.read_text() == "A,B\n" + "4,7\n" * 5
    assert (tmp_path / "ds.unique.csv").read_text() == "A,B,Ndb,true_freq,source\n4,7,5,1,pop1\n"
    assert "singleton proportion: 0.0000" in capsys.readouterr().out


def test_sample_mixture_prints_split(tmp_path, capsys):
    p1, p2 = tmp_path / "p1.csv", tmp_path / "p2.csv"
    small_population(p1, 1)
    small_population(p2, 2, "14,13,29")
    out = tmp_path / "mix.csv"
    assert run("sample", "--pop", p1, p2, "--w1", 0.2, "--n", 500, "--out", out,
               "--unique-out", tmp_path / "u.csv") == 0
    text = capsys.readouterr().out
    assert "split: n1=" in text
    n1 = int(text.split("n1=")[1].split()[0])
    assert abs(n1 / 500 - 0.2) <= 0.1
    assert io.read_unique(tmp_path / "u.csv").n == 500


def test_sample_errors(tmp_path, capsys):
    pop = tmp_path / "pop.csv"
    pop.write_text("A,N\n1,2\n2,x\n")
    out = tmp_path / "ds.csv"
    assert run("sample", "--pop", pop, "--n", 5, "--out", out) == 4
    assert "line 3" in capsys.readouterr().err
    assert exit_code("sample", "--pop", pop, pop, "--n", 5, "--out", out) == 2
    assert exit_code("sample", "--pop", pop, "--n", 0, "--out", out) == 2
    assert exit_code("sample", "--pop", pop, pop, "--w1", 1.5, "--n", 5, "--out", out) == 2
    assert run("sample", "--pop", tmp_path / "nope.csv", "--n", 5, "--out", out) == 4
    assert not out.exists()


def test_fit_single_matches_medians(tmp_path):
    pop, ds, model = tmp_path / "pop.csv", tmp_path / "ds.csv", tmp_path / "m.json"
    small_population(pop)
    assert run("sample", "--pop", pop, "--n", 200, "--out", ds, "--quiet") == 0
    disp = tmp_path / "disp.csv"
    assert run("fit", "--data", ds, "--clusters", 1, "--out", model, "--dispersions-out", disp, "--quiet") == 0
    db, _ = io.read_dataset(ds)
    m = io.read_model(model)
    assert m.centers[0].tolist() == [mle(db[:, k]).y_hat for k in range(3)]
    assert disp.read_text().splitlines()[0] == "cluster,locus,dispersion"


@pytest.mark.filterwarnings("ignore::disclapmix.mixture.DispersionClampWarning")
def test_fit_range_writes_bic_table(tmp_path, capsys):
    pop, ds = tmp_path / "pop.csv", tmp_path / "ds.csv"
    small_population(pop)
    assert run("sample", "--pop", pop, "--n", 150, "--out", ds, "--quiet") == 0
    outdir = tmp_path / "fits"
    assert run("fit", "--data", ds, "--clusters", "1:3", "--jobs", 2, "--out", outdir, "--quiet") == 0
    lines = (outdir / "bic.csv").read_text().splitlines()
    assert lines[0] == "clusters,loglik,n_params,bic,iterations,converged,model"
    assert len(lines) == 4
    bics = [float(line.split(",")[3]) for line in lines[1:]]
    best = capsys.readouterr().out.strip().splitlines()[-1]
    assert best.endswith(f"model_c{int(np.argmin(bics)) + 1}.json")
    for c in (1, 2, 3):
        assert io.read_model(outdir / f"model_c{c}.json").c == c


def test_fit_errors(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("A,B\n")
    assert run("fit", "--data", empty, "--clusters", 1, "--out", tmp_path / "m.json") == 5
    tiny = tmp_path / "tiny.csv"
    tiny.write_text("A,B\n1,1\n1,1\n")
    assert run("fit", "--data", tiny, "--clusters", 2, "--out", tmp_path / "m.json") == 5
    assert exit_code("fit", "--data", tiny, "--clusters", "3:1", "--out", tmp_path / "m.json") == 2
    assert exit_code("fit", "--data", tiny, "--clusters", "x", "--out", tmp_path / "m.json") == 2
    assert not (tmp_path / "m.json").exists()


def write_toy_model(path, p=(0.3, 0.3)):
    from disclapmix.mixture import MixtureModel

    io.write_model(path, MixtureModel.from_dispersions([1.0], [[14, 12]], [list(p)], ("A", "B")))


def test_predict(tmp_path):
    model = tmp_path / "m.json"
    write_toy_model(model, (0.3, 0.4))
    hap = tmp_path / "h.csv"
    hap.write_text("A,B\n14,12\n15,12\n")
    out = tmp_path / "pred.csv"
    assert run("predict", "--model", model, "--haplotypes", hap, "--out", out, "--quiet") == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "A,B,predicted_freq"
    center = (0.7 / 1.3) * (0.6 / 1.4)
    assert float(lines[1].split(",")[2]) == pytest.approx(center, rel=1e-15)
    assert float(lines[2].split(",")[2]) == pytest.approx(center * 0.3, rel=1e-15)


def test_predict_empty_and_mismatch(tmp_path):
    model = tmp_path / "m.json"
    write_toy_model(model)
    hap = tmp_path / "h.csv"
    hap.write_text("A,B\n")
    out = tmp_path / "pred.csv"
    assert run("predict", "--model", model, "--haplotypes", hap, "--out", out) == 0
    assert out.read_text() == "A,B,predicted_freq\n"
    hap.write_text("A,B,C\n1,2,3\n")
    assert run("predict", "--model", model, "--haplotypes", hap, "--out", out) == 6
    assert run("predict", "--model", tmp_path / "none.json", "--haplotypes", hap, "--out", out) == 4


def test_evaluate_toy(tmp_path, capsys):
    model = tmp_path / "m.json"
    write_toy_model(model)
    truth = (0.7 / 1.3) ** 2
    uniq = tmp_path / "u.csv"
    uniq.write_text(f"A,B,Ndb,true_freq,source\n14,12,3,{io.fmt_float(truth)},pop1\n")
    out = tmp_path / "ev.csv"
    assert run("evaluate", "--unique", uniq, "--model", model, "--out", out) == 0
    text = capsys.readouterr().out
    assert "log10 pearson r: undefined" in text
    ratio = float(text.split("mean log10(predicted/true):")[1])
    assert abs(ratio) <= 1e-9
    assert out.read_bytes().split(b"\n")[0] == b"A,B,true_freq,predicted_freq,source"
    uniq.write_text("A,Ndb,true_freq,source\n14,3,0.5,pop1\n")
    assert run("evaluate", "--unique", uniq, "--model", model, "--out", out) == 6


def pipeline(root):
    root.mkdir()
    small_population(root / "p1.csv", 3)
    small_population(root / "p2.csv", 4, "14,13,29")
    assert run("sample", "--pop", root / "p1.csv", root / "p2.csv", "--w1", 0.3, "--n", 120,
               "--seed", 9, "--out", root / "ds.csv", "--quiet") == 0
    assert run("fit", "--data", root / "ds.csv", "--clusters", "1:2", "--out", root / "fits", "--quiet") == 0
    assert run("predict", "--model", root / "fits" / "model_c2.json", "--haplotypes", root / "ds.csv",
               "--out", root / "pred.csv", "--quiet") == 0
    assert run("evaluate", "--unique", root / "ds.unique.csv", "--model", root / "fits" / "model_c1.json",
               "--out", root / "ev.csv", "--quiet") == 0
    return {p.relative_to(root): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_pipeline_byte_identical(tmp_path):
    a = pipeline(tmp_path / "a")
    b = pipeline(tmp_path / "b")
    assert len(a) == 9
    assert a == b
    ev = (tmp_path / "a" / "ev.csv").read_text().splitlines()
    assert all(math.isfinite(float(v)) for line in ev[1:] for v in line.split(",")[3:5])
