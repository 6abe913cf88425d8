"""Tests for the CLI module."""

import csv
import json
import logging
from unittest.mock import patch

import numpy as np
import pytest

from smooth_action_gan.cli import main, parse_args, resolve_config, setup_logging
from smooth_action_gan.data import load_dataset
from smooth_action_gan.training import TrainingLog, load_checkpoint

TINY_MODEL = [
    "--noise-dim", "3",
    "--latent-dim", "2",
    "--lstm-hidden", "5",
    "--decoder-hidden", "6",
    "--encoder-hidden", "4",
    "--dense-width", "6",
    "--precision", "float64",
]


def run(*argv) -> int:
    with patch("sys.argv", ["smooth-action-gan", *argv]):
        return main()


@pytest.fixture
def corpus(tmp_path):
    """Small train and test corpora with 3 classes, T = 5, d = 4."""
    train, test = tmp_path / "train.jsonl", tmp_path / "test.jsonl"
    common = ["--classes", "3", "--T", "5", "--dim", "4"]
    assert run("synth-data", *common, "--per-class", "6", "--seed", "1", "-o", str(train)) == 0
    assert run("synth-data", *common, "--per-class", "4", "--seed", "2", "-o", str(test)) == 0
    return train, test


@pytest.fixture
def pretrained(corpus, tmp_path):
    """A checkpoint holding a briefly pretrained decoder."""
    path = tmp_path / "pretrain.npz"
    code = run(
        "pretrain", "--dataset", str(corpus[0]), "--checkpoint", str(path),
        "--iters", "2", "--batch-size", "8", *TINY_MODEL,
    )
    assert code == 0
    return path


@pytest.fixture
def trained(corpus, pretrained, tmp_path):
    """A checkpoint after two bi-GAN iterations."""
    path = tmp_path / "model.npz"
    code = run(
        "train", "--dataset", str(corpus[0]), "--init", str(pretrained), "--checkpoint", str(path),
        "--iters", "2", "--batch-size", "4", "--T", "5", *TINY_MODEL,
    )
    assert code == 0
    return path


class TestSetupLogging:
    """Tests for setup_logging function."""

    def test_default_level_is_info(self):
        """Default logging level is INFO."""
        with patch("logging.basicConfig") as mock_config:
            setup_logging(verbose=False)
            mock_config.assert_called_once()
            assert mock_config.call_args[1]["level"] == logging.INFO

    def test_verbose_level_is_debug(self):
        """Verbose logging level is DEBUG."""
        with patch("logging.basicConfig") as mock_config:
            setup_logging(verbose=True)
            mock_config.assert_called_once()
            assert mock_config.call_args[1]["level"] == logging.DEBUG


class TestParseArgs:
    """Tests for parse_args function."""

    def test_command_required(self):
        """A subcommand must be given."""
        with patch("sys.argv", ["smooth-action-gan"]):
            with pytest.raises(SystemExit):
                parse_args()

    def test_synth_data_defaults(self):
        """synth-data defaults to 3 classes of 100 sequences, T = 16, d = 8."""
        with patch("sys.argv", ["smooth-action-gan", "synth-data", "-o", "train.jsonl"]):
            args = parse_args()
            assert args.command == "synth-data"
            assert (args.classes, args.per_class, args.length, args.dim) == (3, 100, 16, 8)
            assert args.noise == 0.05
            assert args.config is None
            assert args.verbose is False

    def test_global_flags(self):
        """--config and --verbose come before the subcommand."""
        with patch("sys.argv", ["smooth-action-gan", "-v", "-c", "config.yaml", "train"]):
            args = parse_args()
            assert args.config == "config.yaml"
            assert args.verbose is True

    def test_train_flags(self):
        """Training flags land in their destinations."""
        argv = ["train", "--T", "12", "--lr", "0.001", "--sigma1", "0", "--ablation", "no-cycle",
                "--ablation", "latent-only"]
        args = parse_args(argv)
        assert args.length == 12
        assert args.lr == 0.001
        assert args.sigma1 == 0.0
        assert args.ablation == ["no-cycle", "latent-only"]
        assert args.gamma is None

    def test_unknown_ablation(self):
        """Ablation names are restricted to the presets."""
        with pytest.raises(SystemExit):
            parse_args(["train", "--ablation", "no-gan"])

    @pytest.mark.parametrize("command,default", [("train", 2000), ("pretrain", 2000)])
    def test_iters_help_shows_default(self, capsys, command, default):
        """--iters help names the iteration count used when the flag is absent."""
        with pytest.raises(SystemExit):
            parse_args([command, "--help"])
        help_text = " ".join(capsys.readouterr().out.split())
        assert f"Iterations to run (default: {default})" in help_text

    def test_label_and_mix_mutually_exclusive(self):
        """generate takes either --label or --mix."""
        with pytest.raises(SystemExit):
            parse_args(["generate", "--checkpoint", "m.npz", "--label", "0", "--mix", "1,0", "-o", "x"])
        with pytest.raises(SystemExit):
            parse_args(["generate", "--checkpoint", "m.npz", "-o", "x"])


class TestResolveConfig:
    """Tests for merging the config file with command-line flags."""

    def test_flags_override_file(self, tmp_path):
        """Command line values win over the config file."""
        path = tmp_path / "config.yaml"
        path.write_text("training:\n  gamma: 0.5\n  batch_size: 16\npaths:\n  dataset: a.jsonl\n")
        run_config = resolve_config(parse_args(["-c", str(path), "train", "--gamma", "0.2", "--dataset", "b.jsonl"]))
        assert run_config.training.gamma == 0.2
        assert run_config.training.batch_size == 16
        assert run_config.dataset == "b.jsonl"

    def test_iters_by_command(self):
        """--iters sets pretraining iterations for pretrain and main iterations for train."""
        assert resolve_config(parse_args(["pretrain", "--iters", "7"])).training.pretrain_iterations == 7
        assert resolve_config(parse_args(["train", "--iters", "9"])).training.iterations == 9

    def test_ablation_flags(self):
        """Ablation flags are applied after the other overrides."""
        config = resolve_config(parse_args(["train", "--sigma1", "0.3", "--ablation", "action-only"])).training
        assert config.sigma1 == 0.0
        assert config.ablations == ("action-only",)


class TestSynthData:
    """Tests for the synth-data command."""

    def test_default_corpus(self, tmp_path):
        """Defaults write 300 labelled sequences of 16 frames."""
        path = tmp_path / "train.jsonl"
        assert run("synth-data", "--seed", "7", "-o", str(path)) == 0
        dataset = load_dataset(path)
        assert len(dataset) == 300
        assert dataset.num_classes == 3
        assert dataset.dim == 8
        assert {r.sequence.length for r in dataset.records} == {16}

    def test_deterministic(self, tmp_path):
        """Same seed, byte-identical files."""
        a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        run("synth-data", "--per-class", "5", "--seed", "3", "-o", str(a))
        run("synth-data", "--per-class", "5", "--seed", "3", "-o", str(b))
        assert a.read_bytes() == b.read_bytes()

    def test_split(self, tmp_path):
        """--test-output writes a disjoint held-out split."""
        train, test = tmp_path / "train.jsonl", tmp_path / "test.jsonl"
        code = run("synth-data", "--per-class", "10", "--train-fraction", "0.8", "-o", str(train),
                   "--test-output", str(test))
        assert code == 0
        assert len(load_dataset(train)) + len(load_dataset(test)) == 30
        assert len(load_dataset(test)) == 6

    def test_odd_dimension(self, tmp_path):
        """Poses need x/y pairs."""
        assert run("synth-data", "--dim", "7", "-o", str(tmp_path / "x.jsonl")) == 1


class TestMain:
    """Tests for main function."""

    def test_config_file_not_found(self):
        """Returns 1 when config file not found."""
        assert run("-c", "/nonexistent/config.yaml", "train") == 1

    def test_missing_dataset(self):
        """Training without a dataset is an error."""
        assert run("train", "--iters", "0") == 1

    def test_dataset_not_found(self, tmp_path):
        """Returns 1 when the dataset file doesn't exist."""
        assert run("pretrain", "--dataset", str(tmp_path / "absent.jsonl")) == 1

    def test_argv_parameter(self, tmp_path):
        """main accepts an explicit argument list."""
        assert main(["synth-data", "--per-class", "2", "-o", str(tmp_path / "x.jsonl")]) == 0


class TestPretrainAndTrain:
    """Tests for the pretrain and train commands."""

    def test_pretrain_writes_checkpoint(self, pretrained):
        """The pretraining checkpoint starts at iteration 0 with stats and names."""
        state = load_checkpoint(pretrained)
        assert state.iteration == 0
        assert state.stats is not None
        assert state.class_names == ("class_0", "class_1", "class_2")
        assert state.config.precision == "float64"

    def test_zero_iterations(self, corpus, pretrained, tmp_path):
        """--iters 0 saves the initial state and an empty log."""
        path = tmp_path / "zero.npz"
        code = run("train", "--dataset", str(corpus[0]), "--init", str(pretrained), "--checkpoint", str(path),
                   "--iters", "0", "--T", "5", *TINY_MODEL)
        assert code == 0
        assert load_checkpoint(path).iteration == 0
        lines = path.with_suffix(".csv").read_text().splitlines()
        assert lines == ["iteration,loss_D,loss_adv_G,loss_smooth,loss_cls_real,loss_cycle"]

    def test_train_log(self, trained):
        """Two iterations give two finite log rows."""
        log = TrainingLog.read_csv(trained.with_suffix(".csv"))
        assert log.column("iteration") == [1, 2]
        for entry in log.entries:
            assert all(np.isfinite([entry.loss_D, entry.loss_adv_G, entry.loss_smooth,
                                    entry.loss_cls_real, entry.loss_cycle]))

    def test_no_smoothness_ablation(self, corpus, pretrained, tmp_path):
        """Without smoothness the smoothness column is zero."""
        path = tmp_path / "ablated.npz"
        log_path = tmp_path / "ablated_log.csv"
        code = run("train", "--dataset", str(corpus[0]), "--init", str(pretrained), "--checkpoint", str(path),
                   "--log", str(log_path), "--iters", "2", "--batch-size", "4", "--T", "5",
                   "--ablation", "no-smoothness", *TINY_MODEL)
        assert code == 0
        assert TrainingLog.read_csv(log_path).column("loss_smooth") == [0.0, 0.0]
        assert load_checkpoint(path).config.ablations == ("no-smoothness",)

    def test_resume_appends_log(self, corpus, trained):
        """Resuming continues the iteration count and the log."""
        code = run("train", "--dataset", str(corpus[0]), "--init", str(trained), "--checkpoint", str(trained),
                   "--iters", "1", "--batch-size", "4", "--T", "5", *TINY_MODEL)
        assert code == 0
        assert load_checkpoint(trained).iteration == 3
        assert TrainingLog.read_csv(trained.with_suffix(".csv")).column("iteration") == [1, 2, 3]

    def test_without_pretrained_decoder(self, corpus, tmp_path):
        """Training can start from scratch."""
        path = tmp_path / "scratch.npz"
        code = run("train", "--dataset", str(corpus[0]), "--checkpoint", str(path), "--iters", "1",
                   "--batch-size", "4", "--T", "5", *TINY_MODEL)
        assert code == 0
        assert load_checkpoint(path).iteration == 1


class TestGenerate:
    """Tests for the generate command."""

    def test_label_and_one_hot_mix_agree(self, trained, tmp_path):
        """--label 1 and --mix 0,1,0 sample the same sequences."""
        a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        assert run("generate", "--checkpoint", str(trained), "--label", "1", "--count", "3", "--T", "6",
                   "-o", str(a)) == 0
        assert run("generate", "--checkpoint", str(trained), "--mix", "0,1,0", "--count", "3", "--T", "6",
                   "-o", str(b)) == 0
        np.testing.assert_array_equal(load_dataset(a).sequences(), load_dataset(b).sequences())
        dataset = load_dataset(a)
        assert len(dataset) == 3
        assert dataset.sequences().shape == (3, 6, 4)
        assert dataset.names == ("class_0", "class_1", "class_2")

    def test_mixed_label_and_latents(self, trained, tmp_path):
        """A mixed label is kept in the output and latents go to CSV."""
        out, latents = tmp_path / "mixed.jsonl", tmp_path / "latents.csv"
        code = run("generate", "--checkpoint", str(trained), "--mix", "0.5,0.5,0", "--count", "2", "--T", "4",
                   "-o", str(out), "--latents", str(latents))
        assert code == 0
        assert load_dataset(out).records[0].label.weights == pytest.approx((0.5, 0.5, 0.0))
        with open(latents, newline="") as f:
            rows = list(csv.reader(f))
        assert rows[0] == ["sequence", "t", "h_1", "h_2"]
        assert len(rows) == 1 + 2 * 4

    def test_mix_length_mismatch(self, trained, tmp_path):
        """Mixing weights must cover every class."""
        assert run("generate", "--checkpoint", str(trained), "--mix", "1,0", "-o", str(tmp_path / "x.jsonl")) == 1

    def test_bad_mix(self, trained, tmp_path):
        """Mixing weights must be numbers."""
        assert run("generate", "--checkpoint", str(trained), "--mix", "a,b,c", "-o", str(tmp_path / "x.jsonl")) == 1

    def test_label_out_of_range(self, trained, tmp_path):
        """Labels must name an existing class."""
        assert run("generate", "--checkpoint", str(trained), "--label", "3", "-o", str(tmp_path / "x.jsonl")) == 1

    def test_missing_checkpoint(self, tmp_path):
        """Returns 1 when the checkpoint doesn't exist."""
        assert run("generate", "--checkpoint", str(tmp_path / "absent.npz"), "--label", "0",
                   "-o", str(tmp_path / "x.jsonl")) == 1


class TestEvaluate:
    """Tests for the evaluate command."""

    def test_real_against_itself(self, corpus, tmp_path):
        """A test set scored against itself has zero MMD."""
        report_path = tmp_path / "self.json"
        test = str(corpus[1])
        assert run("evaluate", "--test", test, "--generated", test, "-o", str(report_path)) == 0
        report = json.loads(report_path.read_text())
        assert report["mmd_avg"] == pytest.approx(0.0, abs=1e-6)
        assert report["mmd_seq"] == pytest.approx(0.0, abs=1e-6)

    def test_model_report(self, corpus, trained, tmp_path):
        """Sampling the model fills every section of the report."""
        report_path = tmp_path / "eval" / "report.json"
        code = run("evaluate", "--checkpoint", str(trained), "--test", str(corpus[1]), "--samples-per-class", "3",
                   "--baseline-train", str(corpus[0]), "--baseline-iters", "2", "-o", str(report_path))
        assert code == 0
        report = json.loads(report_path.read_text())
        assert report["mmd_avg"] >= 0.0
        assert set(report["accuracy"]) == {"0", "1", "2"}
        assert set(report["baseline_accuracy"]) == {"0", "1", "2"}
        assert report["latent_step_norm"] > 0.0
        assert report["metadata"]["iteration"] == 2

    def test_test_set_from_config(self, corpus, tmp_path):
        """paths.test_dataset stands in for --test."""
        config = tmp_path / "config.yaml"
        config.write_text(f"paths:\n  test_dataset: {corpus[1]}\n")
        report_path = tmp_path / "r.json"
        assert run("-c", str(config), "evaluate", "--generated", str(corpus[0]), "-o", str(report_path)) == 0
        assert json.loads(report_path.read_text())["mmd_avg"] >= 0.0

    def test_needs_test_set(self, corpus, tmp_path):
        """Without --test or a configured test set there is nothing to compare against."""
        assert run("evaluate", "--generated", str(corpus[0]), "-o", str(tmp_path / "r.json")) == 1

    def test_needs_checkpoint_or_generated(self, corpus, tmp_path):
        """Something must be scored."""
        assert run("evaluate", "--test", str(corpus[1]), "-o", str(tmp_path / "r.json")) == 1


class TestRender:
    """Tests for the render command."""

    def test_render(self, corpus, tmp_path):
        """SVG strips and CSVs are written for each sequence."""
        topology = tmp_path / "bones.json"
        topology.write_text("[[0, 1]]")
        out = tmp_path / "renders"
        assert run("render", str(corpus[1]), "--topology", str(topology), "-o", str(out), "--limit", "2") == 0
        assert sorted(p.name for p in out.iterdir()) == [
            "sequence_0.csv", "sequence_0.svg", "sequence_1.csv", "sequence_1.svg",
        ]

    def test_missing_topology(self, corpus, tmp_path):
        """Returns 1 when the topology file doesn't exist."""
        assert run("render", str(corpus[1]), "--topology", str(tmp_path / "absent.json"), "-o", str(tmp_path)) == 1
