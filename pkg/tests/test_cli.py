import numpy as np
import pytest

from sdpf.classifier import load_model
from sdpf.cli import main
from sdpf.descriptor import read_descriptors_csv
from sdpf.dithering import DEFAULT_PALETTE
from sdpf.evaluation import evaluate
from sdpf.imaging import load_image, save_image
from synth import class_image


@pytest.fixture(scope="module")
def image_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("img") / "sample.ppm"
    save_image(class_image(0, 0, size=96), path)
    return path


@pytest.fixture(scope="module")
def descriptors_csv(small_dataset_root, tmp_path_factory):
    path = tmp_path_factory.mktemp("csv") / "descriptors.csv"
    assert main(["extract", str(small_dataset_root), "-o", str(path)]) == 0
    return path


@pytest.fixture(scope="module")
def model_file(descriptors_csv, tmp_path_factory):
    path = tmp_path_factory.mktemp("model") / "model.svm"
    code = main(["train", str(descriptors_csv), "-o", str(path), "--fraction", "1.0"])
    assert code == 0
    return path


class TestDither:
    def test_writes_palette_image(self, image_file, tmp_path, capsys):
        out = tmp_path / "dithered.ppm"
        assert main(["dither", str(image_file), str(out)]) == 0
        img = load_image(out)
        palette = {color for color in DEFAULT_PALETTE.colors}
        seen = {tuple(px) for row in img.pixels for px in row}
        assert seen <= palette
        assert len(seen) > 1

    def test_missing_input_fails(self, tmp_path, capsys):
        code = main(["dither", str(tmp_path / "absent.ppm"), str(tmp_path / "out.ppm")])
        assert code == 1
        assert capsys.readouterr().err.startswith("error:")


class TestVisualize:
    def test_overlay_written_and_counted(self, image_file, tmp_path, capsys):
        out = tmp_path / "overlay.png"
        assert main(["visualize", str(image_file), str(out)]) == 0
        message = capsys.readouterr().out
        count = int(message.split()[0])
        assert message.strip().endswith("salient patterns")
        assert count > 0
        overlay = load_image(out)
        original = load_image(image_file)
        assert overlay.pixels.shape == original.pixels.shape
        assert np.any(overlay.pixels != original.pixels)


class TestExtract:
    def test_csv_row_per_image(self, descriptors_csv, small_dataset_root):
        config, rows = read_descriptors_csv(descriptors_csv)
        assert config.length == 256
        assert len(rows) == 15
        labels = {label for _, label, _ in rows}
        assert labels == {"c00", "c01", "c02"}

    def test_summary_line(self, small_dataset_root, tmp_path, capsys):
        out = tmp_path / "desc.csv"
        assert main(["extract", str(small_dataset_root), "-o", str(out)]) == 0
        assert capsys.readouterr().out.strip() == \
            f"wrote 15 descriptors for 3 classes to {out}"

    def test_descriptor_flags_change_length(self, small_dataset_root, tmp_path):
        out = tmp_path / "desc.csv"
        argv = ["extract", str(small_dataset_root), "-o", str(out),
                "--kd", "2", "--ka", "4"]
        assert main(argv) == 0
        config, rows = read_descriptors_csv(out)
        assert (config.k_d, config.k_a, config.k_c) == (2, 4, 8)
        assert rows[0][2].size == 64

    def test_missing_root_fails(self, tmp_path, capsys):
        code = main(["extract", str(tmp_path / "nowhere"), "-o", str(tmp_path / "x.csv")])
        assert code == 1
        assert "error:" in capsys.readouterr().err


class TestTrain:
    def test_full_fraction_uses_every_row(self, model_file, capsys):
        model = load_model(model_file)
        assert model.labels == ("c00", "c01", "c02")
        assert model.n_features == 256

    def test_summary_line(self, descriptors_csv, tmp_path, capsys):
        out = tmp_path / "m.svm"
        code = main(["train", str(descriptors_csv), "-o", str(out), "--fraction", "1.0"])
        assert code == 0
        assert capsys.readouterr().out.strip() == \
            f"trained on 15 descriptors, 3 classes; model written to {out}"

    def test_default_fraction_subsamples_per_class(self, descriptors_csv, tmp_path, capsys):
        out = tmp_path / "m.svm"
        assert main(["train", str(descriptors_csv), "-o", str(out)]) == 0
        assert "trained on 6 descriptors" in capsys.readouterr().out

    def test_gamma_zero_means_auto(self, descriptors_csv, tmp_path):
        out = tmp_path / "m.svm"
        argv = ["train", str(descriptors_csv), "-o", str(out),
                "--fraction", "1.0", "--svm-gamma", "0"]
        assert main(argv) == 0
        assert load_model(out).config.gamma == pytest.approx(1.0 / 256.0)

    def test_default_gamma_is_one(self, model_file):
        assert load_model(model_file).config.gamma == 1.0

    def test_bad_fraction_fails(self, descriptors_csv, tmp_path, capsys):
        out = tmp_path / "m.svm"
        code = main(["train", str(descriptors_csv), "-o", str(out), "--fraction", "1.5"])
        assert code == 1
        assert "error:" in capsys.readouterr().err


class TestClassify:
    def test_prints_a_known_label(self, model_file, image_file, capsys):
        # the sample image is class 0 drawn at the dataset's own size
        assert main(["classify", str(model_file), str(image_file)]) == 0
        assert capsys.readouterr().out.strip() in ("c00", "c01", "c02")

    def test_flag_mismatch_fails(self, model_file, image_file, capsys):
        code = main(["classify", str(model_file), str(image_file), "--kd", "2"])
        assert code == 1
        assert "error:" in capsys.readouterr().err

    def test_missing_model_fails(self, image_file, tmp_path, capsys):
        code = main(["classify", str(tmp_path / "absent.svm"), str(image_file)])
        assert code == 1
        assert "error:" in capsys.readouterr().err


class TestEval:
    def test_report_lines(self, small_dataset_root, capsys):
        assert main(["eval", str(small_dataset_root), "--knn", "3"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "classes: 3  train: 6  test: 9"
        assert lines[1].startswith("AP: ")
        assert lines[2].startswith("kNN AP: ")
        cli_ap = float(lines[1].split()[1])
        library = evaluate(small_dataset_root, fraction=0.4, seed=0, knn_k=3)
        assert cli_ap == pytest.approx(library.ap, abs=5e-7)
        assert float(lines[2].split()[2]) == pytest.approx(library.knn_ap, abs=5e-7)

    def test_augmentation_grows_training(self, small_dataset_root, capsys):
        assert main(["eval", str(small_dataset_root), "--augment", "0,90,180,270"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "classes: 3  train: 24  test: 9"
        assert len(lines) == 2    # no kNN line without --knn

    def test_bad_augment_angle_fails(self, small_dataset_root, capsys):
        assert main(["eval", str(small_dataset_root), "--augment", "45"]) == 1
        assert "error:" in capsys.readouterr().err


class TestBench:
    def test_csv_on_stdout(self, image_file, capsys):
        assert main(["bench", str(image_file), "--reps", "2"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "stage,mean_ms"
        assert len(lines) == 14
        assert lines[1].startswith("ED-Dithering,")
        assert lines[-1].startswith("Total,")

    def test_zero_reps_fails(self, image_file, capsys):
        assert main(["bench", str(image_file), "--reps", "0"]) == 1
        assert "error:" in capsys.readouterr().err


class TestParser:
    def test_unknown_subcommand_exits(self):
        with pytest.raises(SystemExit):
            main(["frobnicate"])

    def test_no_subcommand_exits(self):
        with pytest.raises(SystemExit):
            main([])
