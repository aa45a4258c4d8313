import numpy as np
import pytest

from wcel0.errors import ParseError
from wcel0.formats import HEADER, decode_frame_stack, encode_frame_stack, read_frame_stack, write_frame_stack
from wcel0.localizations import LocalizationSet
from wcel0.operator import GridSpec
from wcel0.simulate import FrameStack


def stack(n=3, M=4):
    rng = np.random.default_rng(0)
    return FrameStack(GridSpec(M, 2), rng.integers(0, 2 ** 32 - 1, (n, M * M), dtype=np.uint32),
                      meta={"seed": 5, "rng": "test"})


class TestFrameStack:
    def test_round_trip(self, tmp_path):
        s = stack()
        write_frame_stack(tmp_path / "a.wfs", s)
        back = read_frame_stack(tmp_path / "a.wfs")
        assert back.grid == s.grid
        assert np.array_equal(back.frames, s.frames) and back.frames.dtype == np.uint32
        assert back.meta == {"seed": 5, "rng": "test"}

    def test_layout(self):
        data = encode_frame_stack(stack(2, 3))
        magic, version, n = HEADER.unpack_from(data, 0)
        assert magic == b"WCEL0FS\x00" and version == 1
        assert len(data) == 16 + n + 2 * 9 * 4

    def test_empty_stack(self):
        s = FrameStack(GridSpec(4, 2), np.zeros((0, 16)))
        back = decode_frame_stack(encode_frame_stack(s))
        assert len(back) == 0 and back.frames.shape == (0, 16)

    def test_bad_magic(self):
        data = bytearray(encode_frame_stack(stack()))
        data[0] = ord("X")
        with pytest.raises(ParseError, match="offset 0"):
            decode_frame_stack(bytes(data))

    def test_truncated_frames(self):
        data = encode_frame_stack(stack())
        with pytest.raises(ParseError) as exc:
            decode_frame_stack(data[:-3])
        assert exc.value.offset == len(data) - 3

    def test_truncated_header(self):
        with pytest.raises(ParseError):
            decode_frame_stack(b"WCEL0")

    def test_bad_version(self):
        data = bytearray(encode_frame_stack(stack()))
        data[8] = 9
        with pytest.raises(ParseError) as exc:
            decode_frame_stack(bytes(data))
        assert exc.value.offset == 8

    def test_garbled_metadata(self):
        data = bytearray(encode_frame_stack(stack()))
        data[16] = ord("#")
        with pytest.raises(ParseError) as exc:
            decode_frame_stack(bytes(data))
        assert exc.value.offset == 16


class TestCSV:
    def test_round_trip(self, tmp_path):
        loc = LocalizationSet([0, 0, 2], [1.25, 6399.5, 0.0], [3.0, 1e-3, 77.7], [500.0, 1999.123456789, 1.0])
        loc.write_csv(tmp_path / "l.csv")
        back = LocalizationSet.read_csv(tmp_path / "l.csv")
        for a, b in zip((loc.frame, loc.x_nm, loc.y_nm, loc.intensity),
                        (back.frame, back.x_nm, back.y_nm, back.intensity)):
            assert np.allclose(a, b, rtol=1e-11, atol=0)
        assert (tmp_path / "l.csv").read_text().splitlines()[0] == "frame,x_nm,y_nm,intensity"

    def test_empty(self):
        assert len(LocalizationSet.from_csv(LocalizationSet.empty().to_csv())) == 0

    @pytest.mark.parametrize("text", ["a,b,c,d\n", "frame,x_nm,y_nm,intensity\n0,1,2\n",
                                      "frame,x_nm,y_nm,intensity\n0,1,x,3\n"])
    def test_schema_errors(self, text):
        with pytest.raises(ParseError):
            LocalizationSet.from_csv(text)
