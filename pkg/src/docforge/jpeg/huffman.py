"""Canonical Huffman tables and a bit reader for baseline JPEG scans.

Decoding peeks 16 bits and resolves the symbol in one lookup; the table maps
every 16-bit window whose prefix is a valid code to (length, symbol).
"""

import numpy as np

from ..errors import MalformedStream


class HuffmanTable:
    def __init__(self, counts, symbols):
        """counts: 16 code counts per bit length 1..16; symbols: values in
        code order."""
        if len(counts) != 16 or sum(counts) != len(symbols):
            raise MalformedStream("inconsistent Huffman table definition")
        # lut[window16] = (code_length << 8) | symbol; 0 marks an invalid code
        lut = np.zeros(1 << 16, dtype=np.uint32)
        code = 0
        k = 0
        for length in range(1, 17):
            for _ in range(counts[length - 1]):
                if code >= (1 << length):
                    raise MalformedStream("Huffman code overflow")
                start = code << (16 - length)
                end = (code + 1) << (16 - length)
                lut[start:end] = (length << 8) | symbols[k]
                code += 1
                k += 1
            code <<= 1
        self._lut = lut

    def lookup(self, window: int) -> int:
        """(length << 8) | symbol for a 16-bit peek window; 0 if invalid."""
        return int(self._lut[window])


class BitReader:
    """MSB-first bit reader over an unstuffed entropy-coded chunk."""

    __slots__ = ("_data", "_pos", "_acc", "_nbits", "_pad_bits")

    def __init__(self, data: bytes):
        self._data = data
        self._pos = 0
        self._acc = 0
        self._nbits = 0
        self._pad_bits = 0

    def _fill(self, want: int) -> None:
        while self._nbits < want:
            if self._pos < len(self._data):
                self._acc = (self._acc << 8) | self._data[self._pos]
                self._pos += 1
            else:
                # pad past the end; a well-formed scan never consumes pad bits
                self._acc <<= 8
                self._pad_bits += 8
            self._nbits += 8

    def peek16(self) -> int:
        self._fill(16)
        return (self._acc >> (self._nbits - 16)) & 0xFFFF

    def skip(self, n: int) -> None:
        self._nbits -= n
        self._acc &= (1 << self._nbits) - 1

    def read(self, n: int) -> int:
        if n == 0:
            return 0
        self._fill(n)
        self._nbits -= n
        value = self._acc >> self._nbits
        self._acc &= (1 << self._nbits) - 1
        return value

    def overrun(self) -> bool:
        """True if decoding consumed bits past the end of the chunk
        (peeking past the end is normal for the final symbol)."""
        return self._nbits < self._pad_bits


def decode_symbol(reader: BitReader, table: HuffmanTable) -> int:
    entry = table.lookup(reader.peek16())
    if entry == 0:
        raise MalformedStream("invalid Huffman code in scan")
    reader.skip(entry >> 8)
    return entry & 0xFF


def extend(value: int, nbits: int) -> int:
    """Sign-extend a JPEG magnitude field (EXTEND procedure)."""
    if nbits == 0:
        return 0
    if value < (1 << (nbits - 1)):
        return value - (1 << nbits) + 1
    return value
