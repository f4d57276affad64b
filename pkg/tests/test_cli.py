import json
import math
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest
from scipy import stats

import toy_world
from oracles import naive_bleu4, naive_wembsim, spearman_rho
from wembsim.cli import main
from wembsim.rng import XorShift64Star
from wembsim.stats import forced_choice_accuracy, pairwise_accuracy, Preference, PreferencePair

STOPWORDS = set(
    (Path(__file__).parents[1] / "src/wembsim/data/stopwords_en.txt").read_text().split()
)


def read_report(path):
    lines = Path(path).read_text().splitlines()
    header = [l for l in lines if l.startswith("#")]
    body = [l.split("\t") for l in lines if l and not l.startswith("#")]
    return header, body


def table_rows(body):
    cols = body[0]
    return {row[0]: dict(zip(cols, row)) for row in body[1:]}


@pytest.fixture
def world(tmp_path):
    emb = toy_world.write_embeddings(tmp_path / "toy.vec")
    vectors = {}
    for line in emb.read_text().splitlines():
        w, *v = line.split()
        vectors[w] = [float(x) for x in v]
    return {
        "dir": tmp_path,
        "emb": str(emb),
        "vectors": vectors,
        "systems": str(toy_world.write_jsonl(tmp_path / "systems.jsonl", toy_world.systems())),
        "pairs": str(toy_world.write_jsonl(tmp_path / "pairs.jsonl", toy_world.pairwise())),
        "distraction": str(toy_world.write_jsonl(tmp_path / "dist.jsonl", toy_world.distraction())),
    }


def run(*argv):
    return main([str(a) for a in argv])


def naive_metric(metric, cand, refs, vectors, rule="mean"):
    if metric == "bleu4":
        return naive_bleu4(cand.split(), [r.split() for r in refs])
    keep = lambda s: [w for w in s.split() if w not in STOPWORDS and w in vectors]
    return naive_wembsim(keep(cand), [keep(r) for r in refs], vectors, rule)


def snap_ties(a, b):
    # the oracle's summation order can split a genuine tie by an ulp or two
    return (a, a) if abs(a - b) < 1e-12 else (a, b)


# ------------------------------------------------------------------- score


class TestScore:
    def test_identical_max(self, world, tmp_path):
        inp = toy_world.write_jsonl(tmp_path / "s.jsonl", [
            {"image_id": "x1", "candidate": "a man riding a horse", "references": ["a man riding a horse", "a dog"]},
            {"image_id": "x2", "candidate": "", "references": ["a dog"]},
        ])
        out = tmp_path / "out.tsv"
        assert run("score", inp, "--embeddings", world["emb"], "--rule", "max", "--output", out) == 0
        header, body = read_report(out)
        assert body[0] == ["image_id", "metric", "value", "degenerate"]
        assert body[1] == ["x1", "wembsim", "1.000000", "false"]
        assert body[2] == ["x2", "wembsim", "0.000000", "true"]
        assert "# rule: max" in header and "# embeddings: toy.vec" in header

    def test_two_metrics_two_rows(self, world, tmp_path):
        inp = toy_world.write_jsonl(tmp_path / "s.jsonl", [
            {"image_id": i, "candidate": "a dog on grass", "references": ["a dog running on grass"]} for i in (1, 2)
        ])
        out = tmp_path / "o.tsv"
        assert run("score", inp, "--embeddings", world["emb"], "--metrics", "bleu4,wembsim", "--output", out) == 0
        _, body = read_report(out)
        assert [(r[0], r[1]) for r in body[1:]] == [("1", "wembsim"), ("1", "bleu4"), ("2", "wembsim"), ("2", "bleu4")]
        bleu = naive_bleu4("a dog on grass".split(), ["a dog running on grass".split()])
        assert float(body[2][2]) == pytest.approx(bleu, abs=1e-6)

    def test_all_metrics(self, world, tmp_path):
        out = tmp_path / "all.tsv"
        inp = toy_world.write_jsonl(tmp_path / "s.jsonl", [
            {"image_id": img, "candidate": cands[1], "references": toy_world.IMAGES[img]}
            for img, cands in toy_world.CANDIDATES.items()
        ])
        assert run("score", inp, "--embeddings", world["emb"], "--metrics", "wembsim,bleu4,rouge_l,cider,wmd,wcd",
                   "--output", out) == 0
        _, body = read_report(out)
        assert len(body) == 1 + 4 * 6
        assert all(float(r[2]) >= 0 for r in body[1:])

    def test_unreadable_input(self, world, tmp_path, capsys):
        assert run("score", tmp_path / "missing.jsonl", "--embeddings", world["emb"]) == 2
        assert "error" in capsys.readouterr().err

    def test_bad_embeddings(self, world, tmp_path, write):
        bad = write("bad.vec", "a 1 2\nb 1\n")
        inp = toy_world.write_jsonl(tmp_path / "s.jsonl", [{"image_id": 1, "candidate": "a", "references": ["b"]}])
        assert run("score", inp, "--embeddings", bad) == 2

    def test_bad_rows_skipped_and_strict(self, world, tmp_path, capsys):
        inp = tmp_path / "mixed.jsonl"
        inp.write_text(
            json.dumps({"image_id": 1, "candidate": "a dog", "references": ["a dog"]}) + "\n"
            + "{broken\n"
            + json.dumps({"image_id": 2, "candidate": "x", "references": []}) + "\n"
        )
        out = tmp_path / "o.tsv"
        assert run("score", inp, "--embeddings", world["emb"], "--output", out) == 0
        assert len(read_report(out)[1]) == 2
        err = capsys.readouterr().err
        assert ":2:" in err and ":3:" in err
        assert run("score", inp, "--embeddings", world["emb"], "--output", out, "--strict") == 1

    def test_embeddings_required(self, tmp_path):
        inp = toy_world.write_jsonl(tmp_path / "s.jsonl", [{"image_id": 1, "candidate": "a", "references": ["b"]}])
        assert run("score", inp) == 2
        assert run("score", inp, "--metrics", "bleu4,rouge_l", "--output", tmp_path / "o.tsv") == 0

    def test_stopword_override(self, world, tmp_path, write):
        stops = write("stops.txt", "horse\n")
        inp = toy_world.write_jsonl(tmp_path / "s.jsonl", [
            {"image_id": 1, "candidate": "horse", "references": ["a horse"]}
        ])
        out = tmp_path / "o.tsv"
        assert run("score", inp, "--embeddings", world["emb"], "--stopwords", stops, "--output", out) == 0
        assert read_report(out)[1][1][3] == "true"

    def test_word2vec_format(self, world, tmp_path):
        from wembsim.embeddings import load_text_vectors, save_word2vec_binary

        binary = tmp_path / "toy.bin"
        save_word2vec_binary(load_text_vectors(world["emb"]), binary)
        inp = toy_world.write_jsonl(tmp_path / "s.jsonl", [
            {"image_id": 1, "candidate": "a dog on grass", "references": ["a dog running on grass"]}
        ])
        a, b = tmp_path / "a.tsv", tmp_path / "b.tsv"
        assert run("score", inp, "--embeddings", world["emb"], "--output", a) == 0
        assert run("score", inp, "--embeddings", binary, "--format", "word2vec-bin", "--output", b) == 0
        assert read_report(a)[1] == read_report(b)[1]


# ---------------------------------------------------------------- eval-corr


def system_means(metric, systems, vectors):
    return [
        float(np.mean([naive_metric(metric, i["candidate"], i["references"], vectors) for i in s["instances"]]))
        for s in systems
    ]


class TestEvalCorr:
    def test_twelve_system_fixture(self, world, tmp_path):
        out = tmp_path / "corr.tsv"
        assert run("eval-corr", world["systems"], "--embeddings", world["emb"], "--metrics", "wembsim,bleu4",
                   "--output", out) == 0
        header, body = read_report(out)
        assert "# p-values: two-tailed" in header and "# target: M1" in header
        rows = table_rows(body[: body.index(["system_id", "wembsim", "bleu4", "M1"])] if [""] in body else body)
        systems = toy_world.systems()
        m1 = [s["human_scores"]["M1"] for s in systems]
        for metric in ("wembsim", "bleu4"):
            r, p = stats.pearsonr(system_means(metric, systems, world["vectors"]), m1)
            assert float(rows[metric]["r"]) == pytest.approx(r, abs=1e-6)
            assert float(rows[metric]["p_value"]) == pytest.approx(p, rel=1e-4)
            assert rows[metric]["n"] == "12"

    def test_proportional_is_perfect(self, world, tmp_path):
        # identical candidates per system; M1 set to the wembsim system score itself
        base = toy_world.systems(3)
        means = system_means("wembsim", base, world["vectors"])
        for s, m in zip(base, means):
            s["human_scores"]["M1"] = 3.0 * m
        path = toy_world.write_jsonl(tmp_path / "prop.jsonl", base)
        out = tmp_path / "o.tsv"
        assert run("eval-corr", path, "--embeddings", world["emb"], "--output", out) == 0
        rows = table_rows(read_report(out)[1])
        assert float(rows["wembsim"]["r"]) == 1.0

    def test_constant_metric_undefined(self, world, tmp_path):
        base = toy_world.systems(4)
        for s in base:
            for inst in s["instances"]:
                inst["candidate"] = "a man"
        path = toy_world.write_jsonl(tmp_path / "const.jsonl", base)
        out = tmp_path / "o.tsv"
        assert run("eval-corr", path, "--embeddings", world["emb"], "--output", out) == 0
        rows = table_rows(read_report(out)[1])
        assert rows["wembsim"]["r"] == "NA" and rows["wembsim"]["p_value"] == "NA"

    def test_missing_scores_and_too_few(self, world, tmp_path, capsys):
        base = toy_world.systems(4)
        del base[0]["human_scores"]["M2"]
        path = toy_world.write_jsonl(tmp_path / "m.jsonl", base)
        out = tmp_path / "o.tsv"
        assert run("eval-corr", path, "--embeddings", world["emb"], "--target", "M2", "--output", out) == 0
        assert "team00" in capsys.readouterr().err
        assert table_rows(read_report(out)[1])["wembsim"]["n"] == "3"
        assert run("eval-corr", path, "--embeddings", world["emb"], "--target", "M2", "--output", out, "--strict") == 1
        del base[1]["human_scores"]["M2"]
        path = toy_world.write_jsonl(tmp_path / "m2.jsonl", base)
        assert run("eval-corr", path, "--embeddings", world["emb"], "--target", "M2") == 2


# ------------------------------------------------------------ eval-pairwise


class TestEvalPairwise:
    def test_matches_oracle(self, world, tmp_path):
        out = tmp_path / "pw.tsv"
        assert run("eval-pairwise", world["pairs"], "--embeddings", world["emb"], "--metrics", "wembsim,bleu4",
                   "--seed", 9, "--output", out) == 0
        header, body = read_report(out)
        assert "# seed: 9" in header and "# refs-per-pair: 5" in header
        rows = table_rows(body)
        # replay the documented draw independently of the harness
        rng = XorShift64Star(9)
        pairs = toy_world.pairwise()
        drawn = [rng.sample(p["reference_pool"], 5) for p in pairs]
        for metric in ("wembsim", "bleu4"):
            by_cat = {}
            for p, refs in zip(pairs, drawn):
                sa = naive_metric(metric, p["caption_a"], refs, world["vectors"])
                sb = naive_metric(metric, p["caption_b"], refs, world["vectors"])
                sa, sb = snap_ties(sa, sb)
                by_cat.setdefault(p["category"], []).append(PreferencePair(sa, sb, Preference(p["human_prefers"])))
            accs = {c: pairwise_accuracy(v) for c, v in by_cat.items()}
            for c in ("HHC", "HHI"):
                assert float(rows[metric][c]) == pytest.approx(accs[c].accuracy, abs=1e-6)
                assert int(rows[metric][f"ties_{c}"]) == accs[c].ties
            assert float(rows[metric]["avg"]) == pytest.approx((accs["HHC"].accuracy + accs["HHI"].accuracy) / 2, abs=1e-6)
            assert rows[metric]["n"] == str(len(pairs))

    def test_seed_determinism(self, world, tmp_path):
        a, b, c = (tmp_path / f"{k}.tsv" for k in "abc")
        for path, seed in ((a, 1), (b, 1), (c, 2)):
            assert run("eval-pairwise", world["pairs"], "--embeddings", world["emb"], "--refs-per-pair", 3,
                       "--seed", seed, "--output", path) == 0
        assert a.read_bytes() == b.read_bytes()
        assert a.read_bytes() != c.read_bytes()

    def test_caption_equal_to_pool(self, world, tmp_path):
        ref = "a dog running in the park"
        path = toy_world.write_jsonl(tmp_path / "p.jsonl", [{
            "caption_a": ref, "caption_b": "a woman cooking pizza", "reference_pool": [ref] * 5,
            "human_prefers": "A", "category": "HHC",
        }])
        out = tmp_path / "o.tsv"
        assert run("eval-pairwise", path, "--embeddings", world["emb"], "--output", out) == 0
        rows = table_rows(read_report(out)[1])
        assert rows["wembsim"]["HHC"] == "1.000000" and rows["wembsim"]["HHI"] == "NA"

    def test_pool_too_small(self, world, tmp_path, capsys):
        path = toy_world.write_jsonl(tmp_path / "p.jsonl", [{
            "caption_a": "a dog", "caption_b": "a cat", "reference_pool": ["a dog"] * 4,
            "human_prefers": "A", "category": "HHI",
        }])
        assert run("eval-pairwise", path, "--embeddings", world["emb"]) == 2
        assert "#1" in capsys.readouterr().err


# ---------------------------------------------------------- eval-distraction


class TestEvalDistraction:
    def test_matches_oracle(self, world, tmp_path):
        out = tmp_path / "d.tsv"
        assert run("eval-distraction", world["distraction"], "--embeddings", world["emb"],
                   "--metrics", "wembsim,bleu4", "--output", out) == 0
        rows = table_rows(read_report(out)[1])
        for metric in ("wembsim", "bleu4"):
            by_cat = {}
            for inst in toy_world.distraction():
                good = naive_metric(metric, inst["correct"], inst["references"], world["vectors"])
                bad = naive_metric(metric, inst["distractor"], inst["references"], world["vectors"])
                by_cat.setdefault(inst["category"], []).append(snap_ties(good, bad))
            accs = {c: forced_choice_accuracy(v).accuracy for c, v in by_cat.items()}
            for c in ("SP", "SS", "JP", "JS"):
                assert float(rows[metric][c]) == pytest.approx(accs[c], abs=1e-6)
            assert float(rows[metric]["avg"]) == pytest.approx(sum(accs.values()) / 4, abs=1e-6)

    def test_noun_phrase_distractor(self, world, tmp_path):
        ref = "a man riding a horse on the beach"
        path = toy_world.write_jsonl(tmp_path / "d.jsonl", [{
            "correct": ref, "distractor": "a man", "references": [ref], "category": "JP",
        }])
        out = tmp_path / "o.tsv"
        assert run("eval-distraction", path, "--embeddings", world["emb"], "--output", out) == 0
        assert table_rows(read_report(out)[1])["wembsim"]["JP"] == "1.000000"

    def test_all_tied(self, world, tmp_path):
        path = toy_world.write_jsonl(tmp_path / "d.jsonl", [
            {"correct": "a dog running", "distractor": "running a dog", "references": ["a dog"], "category": c}
            for c in ("SP", "SS", "JP", "JS")
        ])
        out = tmp_path / "o.tsv"
        assert run("eval-distraction", path, "--embeddings", world["emb"], "--output", out) == 0
        row = table_rows(read_report(out)[1])["wembsim"]
        assert row["avg"] == "0.000000" and all(row[f"ties_{c}"] == "1" for c in ("SP", "SS", "JP", "JS"))

    def test_unknown_category(self, world, tmp_path):
        path = toy_world.write_jsonl(tmp_path / "d.jsonl", [
            {"correct": "a dog", "distractor": "a cat", "references": ["a dog"], "category": "ZZ"}
        ])
        assert run("eval-distraction", path, "--embeddings", world["emb"]) == 2


# -------------------------------------------------------- corr-matrix/combine


class TestCorrMatrix:
    def test_single_metric(self, world, tmp_path):
        out = tmp_path / "m.tsv"
        assert run("corr-matrix", world["systems"], "--embeddings", world["emb"], "--output", out) == 0
        _, body = read_report(out)
        assert body == [["metric", "wembsim"], ["wembsim", "1.000000"]]

    def test_matches_oracle(self, world, tmp_path):
        out = tmp_path / "m.tsv"
        metrics = ["wembsim", "bleu4"]
        assert run("corr-matrix", world["systems"], "--embeddings", world["emb"], "--metrics", ",".join(metrics),
                   "--output", out) == 0
        rows = table_rows(read_report(out)[1])
        systems = toy_world.systems()
        vecs = {m: system_means(m, systems, world["vectors"]) for m in metrics}
        assert float(rows["wembsim"]["bleu4"]) == pytest.approx(spearman_rho(vecs["wembsim"], vecs["bleu4"]), abs=1e-6)
        assert rows["bleu4"]["wembsim"] == rows["wembsim"]["bleu4"]


class TestCombine:
    def test_self_combination(self, world, tmp_path):
        out = tmp_path / "c.tsv"
        assert run("combine", world["systems"], "wembsim", "wembsim", "--normalization", "none",
                   "--embeddings", world["emb"], "--output", out) == 0
        rows = table_rows(read_report(out)[1])
        assert rows["wembsim+wembsim"]["r"] == rows["wembsim"]["r"]

    def test_with_target(self, world, tmp_path):
        out = tmp_path / "c.tsv"
        assert run("combine", world["systems"], "M1", "M1", "--output", out) == 0
        rows = table_rows(read_report(out)[1])
        assert rows["M1+M1"]["r"] == "1.000000"

    @pytest.mark.parametrize("norm", ["minmax", "zscore", "none"])
    def test_matches_oracle(self, world, tmp_path, norm):
        out = tmp_path / "c.tsv"
        assert run("combine", world["systems"], "bleu4", "wembsim", "--normalization", norm,
                   "--embeddings", world["emb"], "--output", out) == 0
        header, body = read_report(out)
        assert f"# normalization: {norm}" in header
        rows = table_rows(body)
        systems = toy_world.systems()
        m1 = [s["human_scores"]["M1"] for s in systems]
        b = np.array(system_means("bleu4", systems, world["vectors"]))
        w = np.array(system_means("wembsim", systems, world["vectors"]))
        if norm == "minmax":
            comb = (b - b.min()) / (b.max() - b.min()) + (w - w.min()) / (w.max() - w.min())
        elif norm == "zscore":
            comb = stats.zscore(b) + stats.zscore(w)
        else:
            comb = b + w
        assert float(rows["bleu4"]["r"]) == pytest.approx(stats.pearsonr(b, m1)[0], abs=1e-6)
        assert float(rows["bleu4+wembsim"]["r"]) == pytest.approx(stats.pearsonr(comb, m1)[0], abs=1e-6)

    def test_constant_minmax_fails(self, world, tmp_path):
        base = toy_world.systems(4)
        for s in base:
            for inst in s["instances"]:
                inst["candidate"] = "a man"
        path = toy_world.write_jsonl(tmp_path / "const.jsonl", base)
        assert run("combine", path, "wembsim", "bleu4", "--embeddings", world["emb"]) == 2


def test_console_script_help():
    res = subprocess.run([sys.executable, "-m", "wembsim.cli", "--help"], capture_output=True, text=True)
    assert res.returncode == 0
    for cmd in ("score", "eval-corr", "eval-pairwise", "eval-distraction", "corr-matrix", "combine"):
        assert cmd in res.stdout
