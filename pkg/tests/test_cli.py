import subprocess
import sys

import numpy as np
import pytest

from biokey import cli, imaging


def run(argv):
    return cli.main([str(a) for a in argv])


class TestFingerprintCommand:
    def test_writes_minutiae_file(self, sample_fingerprint_path, tmp_path):
        assert run(["fingerprint", sample_fingerprint_path, "-o", tmp_path]) == 0
        lines = (tmp_path / "minutiae.txt").read_text().splitlines()
        assert len(lines) >= 1
        x, y, kind = lines[0].split()
        assert kind in ("E", "B") and x.isdigit() and y.isdigit()

    def test_dump_stages_writes_six_loadable_pgms(self, sample_fingerprint_path, tmp_path):
        assert run(["fingerprint", sample_fingerprint_path, "-o", tmp_path,
                    "--dump-stages"]) == 0
        dumps = sorted(tmp_path.glob("fp_*.pgm"))
        assert len(dumps) == 6
        for p in dumps:
            img = imaging.load_pgm(p)
            assert img.size > 0

    def test_missing_file_exits_2_and_names_path(self, tmp_path, capsys):
        code = run(["fingerprint", tmp_path / "nope.pgm", "-o", tmp_path])
        assert code == 2
        assert "nope.pgm" in capsys.readouterr().err


class TestIrisCommand:
    def test_writes_feature_file(self, sample_eye_path, tmp_path):
        assert run(["iris", sample_eye_path, "-o", tmp_path]) == 0
        lines = (tmp_path / "iris_features.txt").read_text().splitlines()
        assert len(lines) >= 1
        a, b = lines[0].split()
        assert 0 <= int(a) <= 65535 and 0 <= int(b) <= 65535

    def test_blank_image_exits_3(self, tmp_path, capsys):
        blank = tmp_path / "blank.pgm"
        imaging.save_pgm(np.full((120, 120), 128, dtype=np.uint8), blank)
        assert run(["iris", blank, "-o", tmp_path]) == 3
        assert "iris" in capsys.readouterr().err

    def test_resolution_flags_shape_the_dump(self, sample_eye_path, tmp_path):
        assert run(["iris", sample_eye_path, "-o", tmp_path, "--dump-stages",
                    "--radial-res", 12, "--angular-res", 96]) == 0
        norm = imaging.load_pgm(tmp_path / "iris_03_normalized.pgm")
        assert norm.shape == (12, 96)
        mask = imaging.load_pgm(tmp_path / "iris_04_normalized_mask.pgm")
        assert mask.shape == (12, 96)


class TestFuseAndKeygenCommands:
    def test_fuse_from_files(self, tmp_path):
        (tmp_path / "minutiae.txt").write_text("3 5 E\n7 9 B\n")
        (tmp_path / "iris_features.txt").write_text("100 200\n300 400\n500 600\n")
        assert run(["fuse", tmp_path / "minutiae.txt", tmp_path / "iris_features.txt",
                    "-o", tmp_path, "--seed", 9]) == 0
        template = [int(v) for v in (tmp_path / "template.txt").read_text().split()]
        assert len(template) == 5
        assert all(0 <= v <= 65535 for v in template)

    def test_keygen_writes_key_and_warns_on_low_distinct(self, tmp_path, capsys):
        (tmp_path / "template.txt").write_text("2\n4\n2\n")
        assert run(["keygen", tmp_path / "template.txt", "-o", tmp_path,
                    "--key-bits", 16]) == 0
        err = capsys.readouterr().err
        assert "2 distinct" in err
        key = (tmp_path / "key.txt").read_text().strip()
        assert key == "00" + "1" * 14  # parities of 2, 4, then mean 3 fill
        assert (tmp_path / "key.hex").read_text().strip() == format(int(key, 2), "04x")

    def test_keygen_bad_template_exits_4(self, tmp_path):
        (tmp_path / "template.txt").write_text("not a number\n")
        assert run(["keygen", tmp_path / "template.txt", "-o", tmp_path]) == 4


class TestPipelineCommand:
    def test_produces_256_bit_key(self, sample_fingerprint_path, sample_eye_path, tmp_path):
        assert run(["pipeline", sample_fingerprint_path, sample_eye_path,
                    "-o", tmp_path, "--seed", 42]) == 0
        key = (tmp_path / "key.txt").read_text()
        assert key.endswith("\n")
        bits = key.strip()
        assert len(bits) == 256 and set(bits) <= {"0", "1"}
        hexkey = (tmp_path / "key.hex").read_text().strip()
        assert hexkey == format(int(bits, 2), "064x")

    def test_key_bits_flag(self, sample_fingerprint_path, sample_eye_path, tmp_path):
        assert run(["pipeline", sample_fingerprint_path, sample_eye_path,
                    "-o", tmp_path, "--key-bits", 128]) == 0
        assert len((tmp_path / "key.txt").read_text().strip()) == 128

    def test_byte_identical_outputs_across_runs(self, sample_fingerprint_path,
                                                sample_eye_path, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            assert run(["pipeline", sample_fingerprint_path, sample_eye_path,
                        "-o", out, "--seed", 7]) == 0
        for name in ("key.txt", "key.hex", "template.txt", "minutiae.txt",
                     "iris_features.txt"):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_missing_fingerprint_exits_2(self, sample_eye_path, tmp_path):
        assert run(["pipeline", tmp_path / "absent.pgm", sample_eye_path,
                    "-o", tmp_path]) == 2

    def test_bad_iris_exits_3(self, sample_fingerprint_path, tmp_path):
        blank = tmp_path / "blank.pgm"
        imaging.save_pgm(np.full((100, 100), 200, dtype=np.uint8), blank)
        assert run(["pipeline", sample_fingerprint_path, blank, "-o", tmp_path]) == 3


class TestHelp:
    @pytest.mark.parametrize("command", ["fingerprint", "iris", "fuse", "keygen", "pipeline"])
    def test_help_lists_defaults(self, command, capsys):
        with pytest.raises(SystemExit) as exc:
            cli.main([command, "--help"])
        assert exc.value.code == 0
        out = capsys.readouterr().out
        assert "default" in out

    def test_module_entrypoint_smoke(self, sample_fingerprint_path, sample_eye_path, tmp_path):
        proc = subprocess.run(
            [sys.executable, "-m", "biokey", "pipeline",
             str(sample_fingerprint_path), str(sample_eye_path), "-o", str(tmp_path)],
            capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
        assert (tmp_path / "key.txt").exists()
