"""
RPTM PNM Reader/Writer
Decodes PGM (P2/P5) and PPM (P3/P6) files into grayscale images.
"""

from pathlib import Path
from typing import List, Optional, Union

import numpy as np

from ..errors import FormatError, IoError
from .image import MAX_DIMENSION, GrayImage

SUPPORTED_MAGIC = {b"P2": 1, b"P3": 3, b"P5": 1, b"P6": 3}
WHITESPACE = b" \t\r\n\x0b\x0c"


class PnmLexer:
    """Tokenizes the header (and ASCII payload) of a PNM file"""

    def __init__(self, source: bytes, filename: Optional[str] = None):
        self.source = source
        self.filename = filename
        self.pos = 0

    def error(self, message: str) -> FormatError:
        """Create a format error at current position"""
        return FormatError(message, self.pos, self.filename)

    def peek(self, offset: int = 0) -> Optional[int]:
        """Peek at byte at current position + offset"""
        pos = self.pos + offset
        if pos < len(self.source):
            return self.source[pos]
        return None

    def advance(self) -> Optional[int]:
        """Advance position and return current byte"""
        if self.pos >= len(self.source):
            return None
        byte = self.source[self.pos]
        self.pos += 1
        return byte

    def skip_whitespace(self) -> None:
        """Skip whitespace and '#' comments"""
        while self.peek() is not None:
            byte = self.peek()
            if byte in WHITESPACE:
                self.advance()
            elif byte == ord('#'):
                self.skip_comment()
            else:
                break

    def skip_comment(self) -> None:
        """Skip a comment up to the end of its line"""
        while self.peek() is not None and self.peek() not in b"\r\n":
            self.advance()

    def read_magic(self) -> bytes:
        """Read the two-byte magic number"""
        magic = self.source[:2]
        if len(magic) < 2:
            raise self.error("file too short for a PNM header")
        if magic not in SUPPORTED_MAGIC:
            raise self.error(f"unsupported magic {magic.decode('latin-1')!r}")
        self.pos = 2
        return magic

    def read_integer(self, what: str) -> int:
        """Read a decimal integer token"""
        self.skip_whitespace()
        start = self.pos
        while self.peek() is not None and ord('0') <= self.peek() <= ord('9'):
            self.advance()
        if self.pos == start:
            if self.peek() is None:
                raise self.error(f"unexpected end of file reading {what}")
            raise self.error(f"expected integer for {what}")
        nxt = self.peek()
        if nxt is not None and nxt not in WHITESPACE and nxt != ord('#'):
            raise self.error(f"malformed integer for {what}")
        return int(self.source[start:self.pos])

    def read_integers(self, count: int, what: str) -> List[int]:
        return [self.read_integer(what) for _ in range(count)]


def _decode(source: bytes, filename: Optional[str]) -> GrayImage:
    lexer = PnmLexer(source, filename)
    magic = lexer.read_magic()
    channels = SUPPORTED_MAGIC[magic]

    width = lexer.read_integer("width")
    height = lexer.read_integer("height")
    maxval = lexer.read_integer("maxval")
    if width < 1 or height < 1:
        raise lexer.error(f"invalid dimensions {width}x{height}")
    if width > MAX_DIMENSION or height > MAX_DIMENSION:
        raise lexer.error(f"dimensions {width}x{height} exceed {MAX_DIMENSION}")
    if not 1 <= maxval <= 65535:
        raise lexer.error(f"maxval {maxval} out of range")

    count = width * height * channels
    if magic in (b"P2", b"P3"):
        values = np.array(lexer.read_integers(count, "pixel value"), dtype=np.int64)
    else:
        # Exactly one whitespace byte separates maxval from the raster.
        separator = lexer.advance()
        if separator is None or separator not in WHITESPACE:
            raise lexer.error("missing whitespace after maxval")
        sample_bytes = 1 if maxval < 256 else 2
        payload = source[lexer.pos:lexer.pos + count * sample_bytes]
        if len(payload) < count * sample_bytes:
            raise FormatError(
                f"truncated payload: {len(payload)} of {count * sample_bytes} bytes",
                len(source), filename,
            )
        dtype = np.uint8 if sample_bytes == 1 else np.dtype(">u2")
        values = np.frombuffer(payload, dtype=dtype).astype(np.int64)

    if values.size and values.max() > maxval:
        raise FormatError(f"pixel value exceeds maxval {maxval}", None, filename)
    if maxval != 255:
        values = (values * 255 * 2 + maxval) // (2 * maxval)

    if channels == 3:
        rgb = values.reshape(-1, 3)
        values = (299 * rgb[:, 0] + 587 * rgb[:, 1] + 114 * rgb[:, 2] + 500) // 1000

    return GrayImage(width, height, values.astype(np.uint8).reshape(height, width))


def load_image(path: Union[str, Path]) -> GrayImage:
    """Load a PGM/PPM file as a grayscale image"""
    path = Path(path)
    try:
        source = path.read_bytes()
    except OSError as e:
        raise IoError(f"cannot read image {path}: {e.strerror or e}") from e
    return _decode(source, str(path))


def save_image(img: GrayImage, path: Union[str, Path], binary: bool = True) -> None:
    """Write a grayscale image as P5 (binary) or P2 (ASCII)"""
    path = Path(path)
    if binary:
        blob = f"P5\n{img.width} {img.height}\n255\n".encode("ascii") + img.data.tobytes()
    else:
        rows = "\n".join(" ".join(str(v) for v in row) for row in img.data)
        blob = f"P2\n{img.width} {img.height}\n255\n{rows}\n".encode("ascii")
    try:
        path.write_bytes(blob)
    except OSError as e:
        raise IoError(f"cannot write image {path}: {e.strerror or e}") from e
