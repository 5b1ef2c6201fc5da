"""Baseline JPEG parsing down to the quantized DCT coefficients.

The entropy decoder recovers the exact per-block quantized values (no
dequantization), which is what compression forensics needs; pixel
reconstruction is the standard dequantize + IDCT + YCbCr conversion.
"""

from dataclasses import dataclass, field
from math import ceil

import numpy as np

from ..errors import MalformedStream, UnsupportedFormat
from .dct import dequantize_to_pixels
from .huffman import BitReader, HuffmanTable, decode_symbol, extend
from .tables import MARKER_NAMES, UNSUPPORTED_SOF, ZIGZAG

_ZZ = [int(i) for i in ZIGZAG]


@dataclass
class _Component:
    cid: int
    h: int
    v: int
    tq: int
    dc_table: int = 0
    ac_table: int = 0
    blocks: np.ndarray | None = None  # (by, bx, 64) natural order


@dataclass
class JpegImage:
    """Parsed baseline JPEG: header tables, exact coefficients, pixels."""

    width: int
    height: int
    luma_qtable: np.ndarray                 # (8, 8) natural order
    quantized_luma_blocks: np.ndarray       # (by, bx, 8, 8) natural order
    decoded_pixels: np.ndarray              # (H, W, 3) uint8
    marker_log: list[str] = field(default_factory=list)

    @property
    def n_blocks(self) -> int:
        return self.quantized_luma_blocks.shape[0] * self.quantized_luma_blocks.shape[1]


def _u16(data: bytes, pos: int) -> int:
    if pos + 2 > len(data):
        raise MalformedStream("truncated segment length")
    return (data[pos] << 8) | data[pos + 1]


class _Parser:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0
        self.qtables: dict[int, np.ndarray] = {}
        self.huffman: dict[tuple[int, int], HuffmanTable] = {}
        self.components: list[_Component] = []
        self.width = 0
        self.height = 0
        self.restart_interval = 0
        self.marker_log: list[str] = []
        self.got_frame = False
        self.got_eoi = False

    def parse(self) -> JpegImage:
        data = self.data
        if len(data) < 4 or data[0] != 0xFF or data[1] != 0xD8:
            raise MalformedStream("missing SOI marker")
        self.marker_log.append("SOI")
        self.pos = 2
        while not self.got_eoi:
            marker = self._next_marker()
            name = MARKER_NAMES.get(marker, f"0x{marker:02X}")
            self.marker_log.append(name)
            if marker == 0xD9:  # EOI
                self.got_eoi = True
            elif marker == 0xC0:
                self._read_frame()
            elif marker in UNSUPPORTED_SOF:
                raise UnsupportedFormat(f"unsupported frame type {name}")
            elif marker == 0xCC:
                raise UnsupportedFormat("arithmetic coding not supported")
            elif marker == 0xDB:
                self._read_dqt()
            elif marker == 0xC4:
                self._read_dht()
            elif marker == 0xDD:
                self._read_dri()
            elif marker == 0xDA:
                self._read_scan()
            else:
                self._skip_segment()
        return self._assemble()

    def _next_marker(self) -> int:
        data = self.data
        pos = self.pos
        while True:
            if pos + 1 >= len(data):
                raise MalformedStream("ran off the end looking for a marker")
            if data[pos] != 0xFF:
                raise MalformedStream(f"expected marker at offset {pos}")
            # skip fill bytes (0xFF padding before the marker code)
            while pos + 1 < len(data) and data[pos + 1] == 0xFF:
                pos += 1
            marker = data[pos + 1]
            if marker == 0x00:
                raise MalformedStream("stuffed byte outside entropy-coded data")
            self.pos = pos + 2
            return marker

    def _segment_body(self) -> bytes:
        length = _u16(self.data, self.pos)
        if length < 2:
            raise MalformedStream("segment length below header size")
        body = self.data[self.pos + 2:self.pos + length]
        if len(body) != length - 2:
            raise MalformedStream("truncated segment body")
        self.pos += length
        return body

    def _skip_segment(self) -> None:
        self._segment_body()

    def _read_dqt(self) -> None:
        body = self._segment_body()
        k = 0
        while k < len(body):
            pq, tq = body[k] >> 4, body[k] & 0x0F
            k += 1
            if pq not in (0, 1):
                raise MalformedStream(f"bad DQT precision {pq}")
            n = 64 * (pq + 1)
            if k + n > len(body):
                raise MalformedStream("truncated DQT payload")
            if pq == 0:
                vals = np.frombuffer(body[k:k + 64], dtype=np.uint8).astype(np.int64)
            else:
                vals = np.frombuffer(body[k:k + 128], dtype=">u2").astype(np.int64)
            k += n
            table = np.zeros(64, dtype=np.int64)
            table[ZIGZAG] = vals  # stored zigzag -> natural
            self.qtables[tq] = table.reshape(8, 8)

    def _read_dht(self) -> None:
        body = self._segment_body()
        k = 0
        while k < len(body):
            tc, th = body[k] >> 4, body[k] & 0x0F
            k += 1
            if tc not in (0, 1):
                raise MalformedStream(f"bad DHT class {tc}")
            if k + 16 > len(body):
                raise MalformedStream("truncated DHT counts")
            counts = list(body[k:k + 16])
            k += 16
            total = sum(counts)
            if k + total > len(body):
                raise MalformedStream("truncated DHT symbols")
            symbols = list(body[k:k + total])
            k += total
            self.huffman[(tc, th)] = HuffmanTable(counts, symbols)

    def _read_dri(self) -> None:
        body = self._segment_body()
        if len(body) != 2:
            raise MalformedStream("bad DRI segment")
        self.restart_interval = (body[0] << 8) | body[1]

    def _read_frame(self) -> None:
        if self.got_frame:
            raise MalformedStream("multiple frames")
        body = self._segment_body()
        if len(body) < 6:
            raise MalformedStream("truncated SOF")
        precision = body[0]
        if precision != 8:
            raise UnsupportedFormat(f"{precision}-bit precision not supported")
        self.height = (body[1] << 8) | body[2]
        self.width = (body[3] << 8) | body[4]
        if self.height == 0 or self.width == 0:
            raise MalformedStream("zero image dimension")
        n = body[5]
        if n not in (1, 3):
            raise UnsupportedFormat(f"{n}-component images not supported")
        if len(body) != 6 + 3 * n:
            raise MalformedStream("bad SOF component list")
        for i in range(n):
            cid, hv, tq = body[6 + 3 * i:9 + 3 * i]
            h, v = hv >> 4, hv & 0x0F
            if not (1 <= h <= 4 and 1 <= v <= 4):
                raise MalformedStream(f"bad sampling factors {h}x{v}")
            self.components.append(_Component(cid, h, v, tq))
        self.got_frame = True

    # -- scan decoding --------------------------------------------------

    def _read_scan(self) -> None:
        if not self.got_frame:
            raise MalformedStream("SOS before SOF")
        body = self._segment_body()
        ns = body[0]
        if len(body) != 1 + 2 * ns + 3:
            raise MalformedStream("bad SOS header")
        scan_comps = []
        for i in range(ns):
            cs, tables = body[1 + 2 * i], body[2 + 2 * i]
            comp = next((c for c in self.components if c.cid == cs), None)
            if comp is None:
                raise MalformedStream(f"scan references unknown component {cs}")
            comp.dc_table, comp.ac_table = tables >> 4, tables & 0x0F
            scan_comps.append(comp)
        ss, se, ahal = body[1 + 2 * ns:4 + 2 * ns]
        if ss != 0 or se != 63 or ahal != 0:
            raise UnsupportedFormat("spectral selection implies progressive scan")
        chunks = self._entropy_chunks()
        self._decode_entropy(scan_comps, chunks)

    def _entropy_chunks(self) -> list[bytes]:
        """Split the entropy-coded data at restart markers, unstuffing each
        chunk; leaves self.pos at the terminating marker."""
        data = self.data
        pos = self.pos
        chunks = []
        start = pos
        while True:
            nxt = data.find(b"\xff", pos)
            if nxt < 0 or nxt + 1 >= len(data):
                raise MalformedStream("scan not terminated by a marker")
            code = data[nxt + 1]
            if code == 0x00 or code == 0xFF:
                pos = nxt + 2 if code == 0x00 else nxt + 1
                continue
            chunks.append(data[start:nxt].replace(b"\xff\x00", b"\xff"))
            if 0xD0 <= code <= 0xD7:  # restart: continue with next chunk
                self.marker_log.append(MARKER_NAMES[code])
                pos = nxt + 2
                start = pos
            else:
                self.pos = nxt
                return chunks

    def _decode_entropy(self, comps: list[_Component], chunks: list[bytes]) -> None:
        hmax = max(c.h for c in self.components)
        vmax = max(c.v for c in self.components)
        interleaved = len(comps) > 1
        if interleaved:
            mcus_x = ceil(self.width / (8 * hmax))
            mcus_y = ceil(self.height / (8 * vmax))
            for c in comps:
                c.blocks = np.zeros((mcus_y * c.v, mcus_x * c.h, 64), dtype=np.int32)
        else:
            c = comps[0]
            cw = ceil(self.width * c.h / hmax)
            ch = ceil(self.height * c.v / vmax)
            mcus_x, mcus_y = ceil(cw / 8), ceil(ch / 8)
            c.blocks = np.zeros((mcus_y, mcus_x, 64), dtype=np.int32)
        n_mcus = mcus_x * mcus_y

        interval = self.restart_interval or n_mcus
        expected_chunks = ceil(n_mcus / interval)
        if len(chunks) < expected_chunks:
            raise MalformedStream("truncated scan data")

        mcu = 0
        for chunk in chunks[:expected_chunks]:
            reader = BitReader(chunk)
            preds = {c.cid: 0 for c in comps}
            end = min(mcu + interval, n_mcus)
            while mcu < end:
                my, mx = divmod(mcu, mcus_x)
                for c in comps:
                    reps = c.h * c.v if interleaved else 1
                    for r in range(reps):
                        if interleaved:
                            by = my * c.v + r // c.h
                            bx = mx * c.h + r % c.h
                        else:
                            by, bx = my, mx
                        preds[c.cid] = self._decode_block(
                            reader, c, by, bx, preds[c.cid])
                mcu += 1
            if reader.overrun():
                raise MalformedStream("scan data exhausted mid-block")

    def _decode_block(self, reader: BitReader, comp: _Component,
                      by: int, bx: int, pred: int) -> int:
        dc_tab = self.huffman.get((0, comp.dc_table))
        ac_tab = self.huffman.get((1, comp.ac_table))
        if dc_tab is None or ac_tab is None:
            raise MalformedStream("scan uses an undefined Huffman table")
        out = comp.blocks[by, bx]
        t = decode_symbol(reader, dc_tab)
        dc = pred + extend(reader.read(t), t)
        out[0] = dc
        k = 1
        while k < 64:
            rs = decode_symbol(reader, ac_tab)
            r, s = rs >> 4, rs & 0x0F
            if s == 0:
                if r == 15:
                    k += 16
                    continue
                break  # EOB
            k += r
            if k > 63:
                raise MalformedStream("AC run past end of block")
            out[_ZZ[k]] = extend(reader.read(s), s)
            k += 1
        return dc

    # -- reconstruction -------------------------------------------------

    def _assemble(self) -> JpegImage:
        if not self.got_frame:
            raise MalformedStream("no frame in stream")
        for c in self.components:
            if c.blocks is None:
                raise MalformedStream(f"component {c.cid} never scanned")
            if c.tq not in self.qtables:
                raise MalformedStream(f"missing quantization table {c.tq}")

        hmax = max(c.h for c in self.components)
        vmax = max(c.v for c in self.components)
        planes = []
        for c in self.components:
            cw = ceil(self.width * c.h / hmax)
            ch = ceil(self.height * c.v / vmax)
            blocks = c.blocks.reshape(*c.blocks.shape[:2], 8, 8)
            plane = dequantize_to_pixels(blocks, self.qtables[c.tq])[:ch, :cw]
            if c.h != hmax or c.v != vmax:
                plane = np.repeat(np.repeat(plane, vmax // c.v, axis=0),
                                  hmax // c.h, axis=1)
            planes.append(plane[:self.height, :self.width])

        if len(planes) == 1:
            gray = planes[0].astype(np.uint8)
            pixels = np.stack([gray] * 3, axis=-1)
        else:
            y, cb, cr = planes
            r = y + 1.402 * (cr - 128.0)
            g = y - 0.344136 * (cb - 128.0) - 0.714136 * (cr - 128.0)
            b = y + 1.772 * (cb - 128.0)
            pixels = np.clip(np.stack([r, g, b], axis=-1) + 0.5, 0, 255
                             ).astype(np.uint8)

        luma = self.components[0]
        by, bx = ceil(self.height / 8), ceil(self.width / 8)
        luma_blocks = luma.blocks[:by, :bx].reshape(by, bx, 8, 8)
        return JpegImage(
            width=self.width,
            height=self.height,
            luma_qtable=self.qtables[luma.tq].copy(),
            quantized_luma_blocks=luma_blocks.astype(np.int16),
            decoded_pixels=pixels,
            marker_log=self.marker_log,
        )


def parse_jpeg(data: bytes) -> JpegImage:
    """Parse a baseline sequential JPEG.

    Raises MalformedStream for grammar violations and UnsupportedFormat for
    modes outside baseline 8-bit Huffman (progressive, arithmetic, 12-bit);
    on the latter, callers can fall back to block_dct_quantize over
    externally decoded pixels.
    """
    return _Parser(bytes(data)).parse()
