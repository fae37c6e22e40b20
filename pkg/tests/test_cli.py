import json

import numpy as np
import pytest

from botmeter import cli
from botmeter.dataset import FeatureTable, read_feature_csv, write_feature_csv
from botmeter.demo import make_demo_corpus
from botmeter.selection import derive_universal_set, rank_features_lr, standardize


def run_cli(*argv):
    return cli.main([str(a) for a in argv])


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("corpus")
    config = make_demo_corpus(root, seed=3, flows_per_class=30)
    return config


class TestStageCommands:
    def test_extract_label_rank_universal_train_evaluate(self, corpus, tmp_path, capsys):
        base = corpus.parent
        ds = base / "synth-ddos"
        features = tmp_path / "features.csv"
        assert run_cli("extract", ds / "capture_a.pcap", ds / "capture_b.pcap",
                       "--out", features) == 0
        labeled = tmp_path / "labeled.csv"
        assert run_cli("label", features, "--rules", ds / "rules.csv",
                       "--out", labeled) == 0
        out = capsys.readouterr().out
        assert "Botnet" in out and "Normal" in out

        ranked1 = tmp_path / "ranked1.csv"
        assert run_cli("rank", labeled, "--top-k", 10, "--out", ranked1) == 0

        ds2 = base / "synth-udpflood"
        features2 = tmp_path / "features2.csv"
        run_cli("extract", ds2 / "capture_a.pcap", ds2 / "capture_b.pcap",
                "--out", features2)
        labeled2 = tmp_path / "labeled2.csv"
        run_cli("label", features2, "--rules", ds2 / "rules.csv", "--out", labeled2)
        ranked2 = tmp_path / "ranked2.csv"
        run_cli("rank", labeled2, "--top-k", 10, "--out", ranked2)

        universal = tmp_path / "universal.csv"
        assert run_cli("universal", ranked1, ranked2, "--threshold", 2,
                       "--out", universal) == 0
        names = cli.read_universal_features(universal)
        assert names

        models = tmp_path / "models"
        assert run_cli("train", labeled, "--universal", universal,
                       "--name", "ds", "--out", models) == 0
        assert sorted(p.name for p in models.iterdir()) == [
            f"model_ds_{k}.json" for k in ("KNN", "LR", "NB", "RF")]

        metrics = tmp_path / "metrics.csv"
        assert run_cli("evaluate", labeled, "--universal", universal,
                       "--models", models, "--name", "ds", "--out", metrics) == 0
        lines = metrics.read_text().splitlines()
        assert lines[0] == "dataset,classifier,accuracy,precision,recall,f1"
        assert len(lines) == 5

    def test_synth_blueprint_roundtrip(self, tmp_path):
        blueprint = {
            "seed": 9,
            "flows": [
                {"src_ip": "10.0.0.1", "dst_ip": "8.8.8.8", "src_port": 5,
                 "dst_port": 80, "protocol": 6, "label": "Botnet",
                 "packets": [{"dir": "fwd", "payload": 10, "flags": "S"},
                             {"dir": "bwd", "payload": 20, "gap_us": 50,
                              "flags": "SA"}]},
            ],
        }
        bp_path = tmp_path / "bp.json"
        bp_path.write_text(json.dumps(blueprint))
        out = tmp_path / "cap.pcap"
        assert run_cli("synth", "--blueprint", bp_path, "--out", out) == 0
        from botmeter.meter import ingest_capture
        flows = ingest_capture(str(out))
        assert len(flows) == 1
        assert flows[0].features["Total Backward Packets"] == 1
        rules = out.with_suffix(".rules.csv")
        assert rules.exists() and "Botnet" in rules.read_text()


class TestPipeline:
    def test_single_dataset_smoke(self, corpus, tmp_path):
        config = cli.load_pipeline_config(corpus)
        single = cli.PipelineConfig(
            manifests=config.manifests[:1], meter=config.meter,
            out_dir=tmp_path / "out", seed=1, ratio=0.8, top_k=10, threshold=1)
        assert cli.run_pipeline(single) == 0
        metrics = (tmp_path / "out/metrics.csv").read_text().splitlines()
        assert len(metrics) == 1 + 4  # header + one row per classifier
        for row in metrics[1:]:
            cells = row.split(",")
            assert all(0.0 <= float(v) <= 100.0 for v in cells[2:])

    def test_missing_capture_fails_in_extract_stage(self, corpus, tmp_path, capsys):
        base = tmp_path / "broken"
        base.mkdir()
        (base / "rules.csv").write_text(
            "src_ip,src_port,dst_ip,dst_port,protocol,label\n1.2.3.4,*,*,*,*,X\n")
        (base / "ds.manifest").write_text(
            "name = broken\ncaptures = gone.pcap\nrules = rules.csv\n")
        (base / "config.json").write_text(json.dumps(
            {"datasets": ["ds.manifest"], "out_dir": "out"}))
        assert run_cli("pipeline", "--config", base / "config.json") == 1
        err = capsys.readouterr().err
        assert "extract" in err
        marker = (base / "out/FAILED").read_text()
        assert "extract" in marker

    def test_rerun_is_byte_identical(self, corpus, tmp_path):
        config = cli.load_pipeline_config(corpus)
        outputs = []
        for run in ("a", "b"):
            out_dir = tmp_path / run
            run_config = cli.PipelineConfig(
                manifests=config.manifests, meter=config.meter,
                out_dir=out_dir, seed=5, ratio=0.8, top_k=10, threshold=2)
            assert cli.run_pipeline(run_config) == 0
            outputs.append({p.name: p.read_bytes()
                            for p in sorted(out_dir.iterdir())})
        assert outputs[0].keys() == outputs[1].keys()
        for name in outputs[0]:
            assert outputs[0][name] == outputs[1][name], name


class TestEngineeredUniversalSix:
    def test_controlled_overlap_yields_six_and_six_wide_models(self, tmp_path):
        # Three datasets whose informative features are controlled so the
        # top-10 lists overlap in exactly six canonical names.
        rng = np.random.default_rng(0)
        all_names = [f"F{i:02d}" for i in range(20)]
        shared = all_names[:6]            # informative everywhere
        per_dataset = [all_names[6 + 4 * i: 10 + 4 * i] for i in range(3)]

        labeled_paths = []
        for d in range(3):
            informative = shared + per_dataset[d]
            n = 400
            X = rng.normal(size=(n, len(all_names)))
            signal = sum(X[:, all_names.index(f)] for f in informative)
            y = (signal > 0).astype(int)
            # Boost informative columns so they dominate the LR weights.
            table = FeatureTable(all_names, X, labels=y)
            path = tmp_path / f"ds{d}.csv"
            write_feature_csv(table, path)
            labeled_paths.append(path)

        ranked_lists = []
        for d, path in enumerate(labeled_paths):
            table = read_feature_csv(path)
            std_table, _ = standardize(table)
            ranked = rank_features_lr(std_table, k=10, dataset=f"ds{d}")
            assert set(ranked.names()) == set(shared + per_dataset[d])
            ranked_lists.append(ranked)

        universal = derive_universal_set(ranked_lists, threshold=2)
        assert sorted(universal.features) == sorted(shared)
        assert len(universal.features) == 6

        from botmeter.classifiers import ModelSpec, fit
        table = read_feature_csv(labeled_paths[0]).select(universal.features)
        model = fit(ModelSpec(kind="LR"), table.rows, table.labels)
        assert len(model.weights) == 6
