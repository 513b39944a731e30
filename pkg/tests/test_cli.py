import csv

import pytest

from app.cli import main
from app.evaluation import read_report
from app.spatiotemporal import load_st_model


def _run(*argv) -> int:
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def data_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("synth") / "data"
    assert _run("--seed", 3, "synth", "--out", out, "--identities", 12, "--cameras", 4, "--per-id", 4, "--dim", 8) == 0
    return out


def _rank(data_dir, out, *extra) -> int:
    return _run(
        "rank",
        "--features", data_dir / "features.bin",
        "--meta", data_dir / "meta.csv",
        "--queries", data_dir / "queries.txt",
        "--out", out,
        *extra,
    )


def _rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.reader(fh))


class TestSynth:
    def test_record_count_and_rerun(self, tmp_path):
        args = ["--seed", 42, "synth", "--identities", 50, "--cameras", 6, "--per-id", 8]
        assert _run(*args, "--out", tmp_path / "a") == 0
        assert _run(*args, "--out", tmp_path / "b") == 0
        assert len(_rows(tmp_path / "a" / "meta.csv")) == 401
        for name in ("features.bin", "meta.csv", "cameras.csv", "truth.txt", "queries.txt"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_seed_after_subcommand(self, tmp_path):
        args = ["--identities", 10, "--cameras", 3, "--per-id", 4]
        assert _run("--seed", 42, "synth", "--out", tmp_path / "before", *args) == 0
        assert _run("synth", "--out", tmp_path / "after", *args, "--seed", 42) == 0
        assert _run("--seed", 1, "synth", "--out", tmp_path / "both", *args, "--seed", 42) == 0
        for name in ("features.bin", "meta.csv", "queries.txt"):
            expected = (tmp_path / "before" / name).read_bytes()
            assert (tmp_path / "after" / name).read_bytes() == expected
            assert (tmp_path / "both" / name).read_bytes() == expected

    def test_log_level_after_subcommand(self, tmp_path):
        assert _run("synth", "--out", tmp_path / "x", "--identities", 2, "--log-level", "DEBUG") == 0

    def test_zero_identities(self, tmp_path):
        assert _run("synth", "--out", tmp_path / "x", "--identities", 0) == 1

    def test_unwritable_directory(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("", encoding="utf-8")
        assert _run("synth", "--out", blocker / "sub", "--identities", 2) == 2

    def test_unknown_flag(self, tmp_path):
        assert _run("synth", "--out", tmp_path / "x", "--colour", "red") == 1

    def test_help(self, capsys):
        assert _run("rank", "--help") == 0
        assert "--lambda-rr" in capsys.readouterr().out


class TestFitST:
    def test_writes_default_shapes(self, data_dir, tmp_path):
        out = tmp_path / "st.txt"
        assert _run("fit-st", "--meta", data_dir / "meta.csv", "--cameras", data_dir / "cameras.csv", "--out", out) == 0
        model = load_st_model(out)
        assert (model.alpha1, model.alpha2, model.beta1, model.beta2, model.omega) == (6.0, 0.5, 6.0, 0.5, 0.2)

    def test_single_camera(self, tmp_path):
        meta = tmp_path / "meta.csv"
        meta.write_text("image_id,vehicle_id,camera_id,timestamp_s\na,v1,c1,0\nb,v1,c1,30\n", encoding="utf-8")
        cams = tmp_path / "cameras.csv"
        cams.write_text("camera_a,camera_b,distance_m\nc1,c2,100\n", encoding="utf-8")
        assert _run("fit-st", "--meta", meta, "--cameras", cams, "--out", tmp_path / "st.txt") == 1

    def test_invalid_utf8_metadata(self, data_dir, tmp_path):
        meta = tmp_path / "meta.csv"
        meta.write_bytes(b"image_id,vehicle_id,camera_id,timestamp_s\na\xff,v1,c1,0\n")
        assert _run("fit-st", "--meta", meta, "--cameras", data_dir / "cameras.csv", "--out", tmp_path / "st.txt") == 1

    def test_missing_file(self, tmp_path):
        assert _run("fit-st", "--meta", tmp_path / "nope.csv", "--cameras", tmp_path / "c.csv", "--out", tmp_path / "st.txt") == 2


class TestRank:
    @pytest.fixture
    def model_file(self, data_dir, tmp_path):
        out = tmp_path / "st.txt"
        assert _run("fit-st", "--meta", data_dir / "meta.csv", "--cameras", data_dir / "cameras.csv", "--out", out) == 0
        return out

    def test_zero_omega_equals_appearance(self, data_dir, model_file, tmp_path):
        assert _rank(data_dir, tmp_path / "plain.csv") == 0
        assert _rank(data_dir, tmp_path / "fused.csv", "--st", model_file, "--cameras", data_dir / "cameras.csv", "--omega", 0) == 0
        assert (tmp_path / "plain.csv").read_bytes() == (tmp_path / "fused.csv").read_bytes()

    def test_identity_rerank(self, data_dir, model_file, tmp_path):
        st = ["--st", model_file, "--cameras", data_dir / "cameras.csv"]
        assert _rank(data_dir, tmp_path / "a.csv", *st) == 0
        assert _rank(data_dir, tmp_path / "b.csv", *st, "--rerank", "--lambda-rr", 1) == 0
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()

    def test_rerank_runs(self, data_dir, tmp_path):
        assert _rank(data_dir, tmp_path / "r.csv", "--rerank", "--k1", 8, "--k2", 3) == 0
        rows = _rows(tmp_path / "r.csv")
        assert rows[0] == ["query_id", "rank", "gallery_id", "distance"]
        assert len(rows) == 1 + 12 * (48 - 12)

    def test_st_needs_cameras(self, data_dir, model_file, tmp_path):
        assert _rank(data_dir, tmp_path / "x.csv", "--st", model_file) == 1

    def test_empty_query_file(self, data_dir, tmp_path):
        empty = tmp_path / "queries.txt"
        empty.write_text("", encoding="utf-8")
        code = _run(
            "rank",
            "--features", data_dir / "features.bin",
            "--meta", data_dir / "meta.csv",
            "--queries", empty,
            "--out", tmp_path / "x.csv",
        )
        assert code == 1


class TestEval:
    def test_perfect_ranking(self, tmp_path):
        meta = tmp_path / "meta.csv"
        meta.write_text(
            "image_id,vehicle_id,camera_id,timestamp_s\nq,v1,c1,0\nm,v1,c2,5\nx,v2,c2,9\n",
            encoding="utf-8",
        )
        ranks = tmp_path / "ranks.csv"
        ranks.write_text("query_id,rank,gallery_id,distance\nq,1,m,0.1\nq,2,x,0.7\n", encoding="utf-8")
        out = tmp_path / "report.txt"
        assert _run("eval", "--ranks", ranks, "--meta", meta, "--out", out, "--max-rank", 2) == 0
        report = read_report(out)
        assert report.map == 1.0
        assert report.top1 == 1.0

    def test_stdout(self, data_dir, tmp_path, capsys):
        assert _rank(data_dir, tmp_path / "r.csv") == 0
        capsys.readouterr()
        assert _run("eval", "--ranks", tmp_path / "r.csv", "--meta", data_dir / "meta.csv") == 0
        assert capsys.readouterr().out.startswith("map = ")

    def test_empty_ranking(self, data_dir, tmp_path):
        ranks = tmp_path / "ranks.csv"
        ranks.write_text("query_id,rank,gallery_id,distance\n", encoding="utf-8")
        assert _run("eval", "--ranks", ranks, "--meta", data_dir / "meta.csv") == 1


class TestTrainToy:
    def test_trace(self, data_dir, tmp_path):
        trace = tmp_path / "trace.csv"
        assert _run("train-toy", "--data", data_dir, "--epochs", 3, "--trace", trace) == 0
        rows = _rows(trace)
        assert rows[0] == ["epoch", "total", "ce", "tri"]
        assert len(rows) == 5

    def test_seed_after_subcommand(self, data_dir, tmp_path):
        before, after = tmp_path / "before.csv", tmp_path / "after.csv"
        assert _run("--seed", 3, "train-toy", "--data", data_dir, "--epochs", 2, "--batch-p", 2, "--batch-k", 2, "--trace", before) == 0
        assert _run("train-toy", "--data", data_dir, "--epochs", 2, "--batch-p", 2, "--batch-k", 2, "--trace", after, "--seed", 3) == 0
        assert before.read_bytes() == after.read_bytes()

    def test_single_image_batches_rejected(self, data_dir):
        assert _run("train-toy", "--data", data_dir, "--batch-p", 2, "--batch-k", 1) == 1

    def test_zero_epochs(self, data_dir, tmp_path):
        trace = tmp_path / "trace.csv"
        assert _run("train-toy", "--data", data_dir, "--epochs", 0, "--trace", trace) == 0
        assert len(_rows(trace)) == 2


class TestSweep:
    def _sweep(self, data_dir, out, param, values, *extra) -> int:
        return _run("sweep", "--param", param, "--values", values, "--data", data_dir, "--out", out, *extra)

    def test_omega(self, data_dir, tmp_path):
        out = tmp_path / "omega.csv"
        values = ",".join(f"{v / 10:.1f}" for v in range(11))
        assert self._sweep(data_dir, out, "omega", values) == 0
        rows = _rows(out)
        assert rows[0] == ["value", "map", "top1", "top5"]
        assert [r[0] for r in rows[1:]] == values.split(",")

    def test_lambda(self, data_dir, tmp_path):
        out = tmp_path / "lambda.csv"
        assert self._sweep(data_dir, out, "lambda", "0,0.2,0.4,0.6,0.8,1.0", "--epochs", 2) == 0
        assert len(_rows(out)) == 7

    def test_parts(self, data_dir, tmp_path):
        out = tmp_path / "parts.csv"
        assert self._sweep(data_dir, out, "parts", "1,2,4") == 0
        assert len(_rows(out)) == 4

    def test_attention_order(self, data_dir, tmp_path):
        out = tmp_path / "att.csv"
        values = "channel_then_spatial,spatial_then_channel,parallel,none"
        assert self._sweep(data_dir, out, "attention-order", values) == 0
        assert [r[0] for r in _rows(out)[1:]] == values.split(",")

    def test_unknown_parameter(self, data_dir, tmp_path):
        assert self._sweep(data_dir, tmp_path / "x.csv", "margin", "1") == 1

    def test_bad_value(self, data_dir, tmp_path):
        assert self._sweep(data_dir, tmp_path / "x.csv", "omega", "abc") == 1
