import math

import numpy as np
import pytest

from swsig import PathSignature, RadioScene, SystemConfig, synthesize_response
from swsig import io
from swsig.cli import EXIT_CONFIG, EXIT_IO, EXIT_OK, main, table1_rows
from swsig.errors import ConfigurationError

SCENE = """\
config: {M: 128, N: 128, alpha: 0.1}
paths:
  - {norm_angle: 0.275390625, norm_delay: 0.119140625, gain_re: 0.5, gain_im: 0.5}
  - {norm_angle: 0.626953125, norm_delay: 0.69140625, gain_re: 0.5, gain_im: 0.5}
"""


@pytest.fixture
def scene_file(tmp_path):
    p = tmp_path / "scene.yaml"
    p.write_text(SCENE)
    return p


def _run(capsys, *argv):
    rc = main([str(a) for a in argv])
    out = capsys.readouterr()
    return rc, out.out, out.err


class TestDocuments:
    def test_scene_round_trip(self, tmp_path):
        cfg = SystemConfig(16, 8, 0.05)
        scene = RadioScene((PathSignature(0.1, 0.2, 1 - 2j), PathSignature(0.7, 0.9, 0.5j)))
        io.write_scene(tmp_path / "s.yaml", scene, cfg)
        doc = io.read_document(tmp_path / "s.yaml")
        assert io.config_from_mapping(doc["config"]) == cfg
        assert io.scene_from_mapping(doc, cfg) == scene

    def test_physical_units(self):
        cfg = SystemConfig(128, 128, 0.1)
        doc = {"paths": [{"angle_deg": 30.0, "delay_s": 1e-8}]}
        (p,) = io.scene_from_mapping(doc, cfg)
        assert (p.norm_angle, p.norm_delay) == pytest.approx((0.25, 0.5703125))

    def test_unknown_config_key(self):
        with pytest.raises(ConfigurationError):
            io.config_from_mapping({"Mx": 3})

    def test_response_csv_round_trip(self, tmp_path):
        cfg = SystemConfig(5, 4, 0.1)
        H = synthesize_response(RadioScene((PathSignature(0.33, 0.77, 0.1 + 0.9j),)), cfg)
        path = tmp_path / "h.csv"
        path.write_text(io.response_csv(H, {"config": cfg.as_dict()}))
        back = io.read_response_csv(path)
        assert back.config == cfg
        assert np.array_equal(back.data, H.data)

    def test_header_block_precedes_columns(self):
        text = io.format_csv({"seed": 3}, ("a", "b"), [(1, 0.5)])
        assert text.splitlines() == ["# seed: 3", "a,b", "1,0.5"]

    def test_sweep_file(self, tmp_path):
        p = tmp_path / "sw.yaml"
        p.write_text("M: 32\nalpha: [0.01, 0.1]\nK: 3\nmode: two-stage\nestimator: {rot_m: 3}\n")
        sw = io.load_sweep(p)
        assert sw.alphas == (0.01, 0.1) and sw.targets == (3,) and sw.modes == ("two-stage",)
        assert sw.options.rotation_counts == (3, 5)

    def test_sweep_bad_mode(self, tmp_path):
        p = tmp_path / "sw.yaml"
        p.write_text("mode: three-stage\n")
        with pytest.raises(ConfigurationError):
            io.load_sweep(p)


class TestCli:
    def test_empty_scene_gives_zero_csv(self, tmp_path, capsys):
        p = tmp_path / "empty.yaml"
        p.write_text("")
        rc, out, _ = _run(capsys, "synth", p, "--M", 4, "--N", 3)
        assert rc == EXIT_OK
        _, cols, rows = io.parse_csv(out)
        assert cols == ["m", "n", "re", "im"] and len(rows) == 12
        assert all(float(r[2]) == 0 and float(r[3]) == 0 for r in rows)

    def test_invalid_alpha_exit_2(self, scene_file, capsys):
        rc, out, err = _run(capsys, "synth", scene_file, "--alpha", 1.5)
        assert rc == EXIT_CONFIG and out == "" and "alpha" in err

    def test_missing_file_exit_1(self, tmp_path, capsys):
        assert _run(capsys, "synth", tmp_path / "nope.yaml")[0] == EXIT_IO

    def test_malformed_yaml_exit_1(self, tmp_path, capsys):
        p = tmp_path / "bad.yaml"
        p.write_text("paths: [unclosed\n")
        assert _run(capsys, "estimate", p)[0] == EXIT_IO

    def test_bad_flag_exit_2(self, scene_file, capsys):
        assert _run(capsys, "estimate", scene_file, "--mode", "sideways")[0] == EXIT_CONFIG

    def test_header_echoes_config(self, scene_file, capsys):
        _, out, _ = _run(capsys, "estimate", scene_file, "--nbr", 13, "--max-paths", 2, "--seed", 4)
        header, _, _ = io.parse_csv(out)
        assert header["config"] == {"M": 128, "N": 128, "alpha": 0.1, "fc_hz": 73e9, "d_over_lambda": 0.5}
        assert header["seed"] == 4
        assert header["estimator"]["nbr_resolved"] == [13, 13]

    def test_spectrum_peak_via_csv(self, scene_file, tmp_path, capsys):
        h = tmp_path / "h.csv"
        assert _run(capsys, "synth", scene_file, "--out", h)[0] == EXIT_OK
        rc, out, _ = _run(capsys, "spectrum", h)
        header, cols, rows = io.parse_csv(out)
        assert rc == EXIT_OK and cols == ["k", "l", "re", "im"]
        mags = {(int(r[0]), int(r[1])): abs(complex(float(r[2]), float(r[3]))) for r in rows}
        top = max(mags.values())
        assert {b for b, v in mags.items() if v >= top * (1 - 1e-6)} & {(36, 17), (87, 92)}
        assert tuple(header["peak_bin"]) == (36, 17)

    def test_estimate_two_stage_vs_one_stage(self, scene_file, capsys):
        _, out, _ = _run(capsys, "estimate", scene_file, "--nbr", 13, "--max-paths", 2)
        _, _, rows = io.parse_csv(out)
        got = sorted((float(r[5]) * 128, float(r[6]) * 128) for r in rows)
        assert got == pytest.approx([(35.25, 15.25), (80.25, 88.5)], abs=1e-9)
        _, out, _ = _run(capsys, "estimate", scene_file, "--nbr", 13, "--max-paths", 2, "--mode", "one-stage")
        _, _, rows = io.parse_csv(out)
        coarse = sorted((int(r[3]), int(r[4])) for r in rows)
        assert coarse == [(36, 17), (87, 92)]

    def test_estimate_on_grid_exact(self, tmp_path, capsys):
        p = tmp_path / "g.yaml"
        p.write_text("config: {M: 16, N: 16}\npaths:\n  - {norm_angle: 0.25, norm_delay: 0.5, gain_re: 2.0}\n")
        _, out, _ = _run(capsys, "estimate", p)
        _, _, rows = io.parse_csv(out)
        assert len(rows) == 1
        assert [float(x) for x in rows[0][5:9]] == pytest.approx([0.25, 0.5, 2.0, 0.0], abs=1e-12)

    def test_table1_rows(self):
        assert table1_rows([0.2]) == [(0.2, 81, 96)]

    def test_sweep_jobs_byte_identical(self, tmp_path, capsys):
        p = tmp_path / "sw.yaml"
        p.write_text("M: 32\nalpha: 0.1\nK: 2\nsnr_db: [10]\ntrials: 4\nseed: 9\n")
        _, a, _ = _run(capsys, "sweep", p, "--jobs", 1)
        _, b, _ = _run(capsys, "sweep", p, "--jobs", 3)
        assert a == b and "hit_rate" in a

    def test_same_seed_same_noise(self, scene_file, capsys):
        a = _run(capsys, "synth", scene_file, "--M", 8, "--N", 8, "--snr", 5, "--seed", 2)[1]
        b = _run(capsys, "synth", scene_file, "--M", 8, "--N", 8, "--snr", 5, "--seed", 2)[1]
        c = _run(capsys, "synth", scene_file, "--M", 8, "--N", 8, "--snr", 5, "--seed", 3)[1]
        assert a == b != c
