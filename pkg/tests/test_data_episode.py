import struct

import numpy as np
import pytest

from cgp.data import Episode, EpisodeError, load_episode, save_episode


def make_episode(n_frames=4, extras=True):
    rng = np.random.default_rng(11)
    ex = {}
    if extras:
        ex["pred_tactile"] = rng.standard_normal((n_frames, 3, 8, 2)).astype(np.float32)
    return Episode(
        task_id="box_flip",
        seed=3,
        config_hash="ab" * 32,
        frame_hz=5.0,
        success=True,
        cause="completed",
        images=rng.standard_normal((n_frames, 6, 5)).astype(np.float32),
        tactile=rng.standard_normal((n_frames, 8, 2)).astype(np.float32),
        states=rng.standard_normal((n_frames, 7)).astype(np.float32),
        targets=rng.standard_normal((n_frames, 7)).astype(np.float32),
        t=(np.arange(n_frames) / 5.0).astype(np.float32),
        extras=ex,
    )


class TestEpisodeValidation:
    def test_rejects_empty(self):
        with pytest.raises(EpisodeError, match="frame"):
            make_episode(n_frames=0)

    def test_rejects_frame_count_mismatch(self):
        ep = make_episode()
        with pytest.raises(EpisodeError):
            Episode(task_id=ep.task_id, seed=ep.seed, config_hash=ep.config_hash,
                    frame_hz=ep.frame_hz, success=ep.success, cause=ep.cause,
                    images=ep.images[:2], tactile=ep.tactile, states=ep.states,
                    targets=ep.targets, t=ep.t)

    def test_rejects_state_target_layout_mismatch(self):
        ep = make_episode()
        with pytest.raises(EpisodeError):
            Episode(task_id=ep.task_id, seed=ep.seed, config_hash=ep.config_hash,
                    frame_hz=ep.frame_hz, success=ep.success, cause=ep.cause,
                    images=ep.images, tactile=ep.tactile, states=ep.states,
                    targets=ep.targets[:, :5], t=ep.t)

    def test_arrays_coerced_to_f32(self):
        ep = make_episode()
        assert ep.images.dtype == np.float32
        assert ep.t.dtype == np.float32


class TestRoundTrip:
    def test_bit_exact(self, tmp_path):
        ep = make_episode()
        p = tmp_path / "e.cgpe"
        save_episode(ep, p)
        assert load_episode(p) == ep

    def test_no_extras(self, tmp_path):
        ep = make_episode(extras=False)
        p = tmp_path / "e.cgpe"
        save_episode(ep, p)
        back = load_episode(p)
        assert back == ep and back.extras == {}

    def test_failed_episode_survives(self, tmp_path):
        ep = make_episode()
        failed = Episode(task_id=ep.task_id, seed=ep.seed, config_hash=ep.config_hash,
                         frame_hz=ep.frame_hz, success=False, cause="shattered",
                         images=ep.images, tactile=ep.tactile, states=ep.states,
                         targets=ep.targets, t=ep.t)
        p = tmp_path / "f.cgpe"
        save_episode(failed, p)
        back = load_episode(p)
        assert back.success is False and back.cause == "shattered"


class TestParseErrors:
    def test_bad_magic(self, tmp_path):
        p = tmp_path / "e.cgpe"
        save_episode(make_episode(), p)
        raw = bytearray(p.read_bytes())
        raw[0] ^= 0xFF
        p.write_bytes(bytes(raw))
        with pytest.raises(EpisodeError, match="magic"):
            load_episode(p)

    def test_version_mismatch_reports_both(self, tmp_path):
        p = tmp_path / "e.cgpe"
        save_episode(make_episode(), p)
        raw = bytearray(p.read_bytes())
        raw[4:8] = struct.pack("<I", 9)
        p.write_bytes(bytes(raw))
        with pytest.raises(EpisodeError, match=r"(?s)9.*1|1.*9"):
            load_episode(p)

    def test_truncation_names_section(self, tmp_path):
        p = tmp_path / "e.cgpe"
        ep = make_episode()
        save_episode(ep, p)
        raw = p.read_bytes()
        header_len = struct.unpack("<I", raw[8:12])[0]
        body = 12 + header_len
        cuts = {
            "images": body + 8,
            "tactile": body + 4 * ep.images.size + 4,
            "header": 12 + header_len // 2,
        }
        for section, cut in cuts.items():
            q = tmp_path / f"cut_{section}.cgpe"
            q.write_bytes(raw[:cut])
            with pytest.raises(EpisodeError, match=section):
                load_episode(q)

    def test_truncation_reports_byte_offset(self, tmp_path):
        p = tmp_path / "e.cgpe"
        save_episode(make_episode(), p)
        raw = p.read_bytes()
        q = tmp_path / "cut.cgpe"
        q.write_bytes(raw[: len(raw) - 3])
        with pytest.raises(EpisodeError, match=r"byte \d+"):
            load_episode(q)

    def test_trailing_bytes_rejected(self, tmp_path):
        p = tmp_path / "e.cgpe"
        save_episode(make_episode(), p)
        p.write_bytes(p.read_bytes() + b"\x00")
        with pytest.raises(EpisodeError, match="trailing"):
            load_episode(p)
