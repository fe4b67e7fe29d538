"""Simulated per-process heap with an explicit block layout.

The heap is a flat simulated address space addressed by 32-bit offsets.
Blocks tile it contiguously: a 4-byte header, an 8-byte-aligned payload
whose size is a multiple of 8 (minimum 8), and a 4-byte footer identical
to the header. Header and footer each hold the payload size with the
allocated flag packed into bit 0, so both neighbors of any block can be
classified without external tables.

Free blocks form an explicit doubly-linked list threaded through their
first 8 payload bytes (two 4-byte offsets, next then prev). Allocation
is first-fit in list order; the list is kept most-recently-freed first,
so the search runs from most to least recently freed. Freed blocks are
fully coalesced with both neighbors through the boundary tags and the
merged block goes to the list head. This policy set is deliberately
simple and fragmentation-prone; the point is faithful accounting, not a
competitive allocator.

Growth is bounded by `limit`: any operation that would push the spanned
extent past it raises MemoryExhaustionFault, leaving the heap exactly as
it was.

Layout of a block whose payload starts at offset p (p is what callers
hold, and p % 8 == 4 because the first header sits at offset 0):

    p-4        p              p+size     p+size+4
    [header][payload bytes...][footer]  [next block's header]
"""

import struct

from .faults import InvalidFree, MemoryExhaustionFault, Overflow, ZeroSize

NIL = 0xFFFFFFFF
MIN_PAYLOAD = 8
OVERHEAD = 8            # header + footer
MIN_BLOCK = MIN_PAYLOAD + OVERHEAD
SIZE_CAP = 1 << 31      # single-allocation byte cap (32-bit space)

_u32 = struct.Struct("<I")


def _round8(n: int) -> int:
    return (n + 7) & ~7


class HeapImage:
    """One process's simulated heap."""

    def __init__(self, limit: int, name: str = ""):
        self.limit = int(limit)
        self.name = name
        self._buf = bytearray()
        self.extent = 0
        self.free_head = NIL
        self._live: set[int] = set()   # payload offsets currently allocated
        self.allocated_bytes = 0
        self.peak_allocated = 0
        self.peak_extent = 0
        self.alloc_count = 0
        self.free_count = 0
        self.realloc_count = 0
        self._invocation_peak = 0

    # -- raw word access -----------------------------------------------------

    def _read(self, off: int) -> int:
        return _u32.unpack_from(self._buf, off)[0]

    def _write(self, off: int, value: int):
        _u32.pack_into(self._buf, off, value)

    # -- block primitives ------------------------------------------------------

    def _header(self, p: int) -> int:
        return self._read(p - 4)

    def _size(self, p: int) -> int:
        return self._header(p) & ~7

    def _is_allocated(self, p: int) -> bool:
        return bool(self._header(p) & 1)

    def _set_tags(self, p: int, size: int, allocated: bool):
        word = size | (1 if allocated else 0)
        self._write(p - 4, word)
        self._write(p + size, word)

    def _successor(self, p: int, size: int) -> int:
        """Payload offset of the next block, or -1 past the extent."""
        succ = p + size + OVERHEAD
        return succ if succ - 4 < self.extent else -1

    # -- free-list primitives (links live in the first 8 payload bytes) -------

    def _next(self, p: int) -> int:
        return self._read(p)

    def _prev(self, p: int) -> int:
        return self._read(p + 4)

    def _list_push_front(self, p: int):
        self._write(p, self.free_head)
        self._write(p + 4, NIL)
        if self.free_head != NIL:
            self._write(self.free_head + 4, p)
        self.free_head = p

    def _list_remove(self, p: int):
        nxt, prv = self._next(p), self._prev(p)
        if prv == NIL:
            self.free_head = nxt
        else:
            self._write(prv, nxt)
        if nxt != NIL:
            self._write(nxt + 4, prv)

    # -- public operations ------------------------------------------------------

    def allocate(self, size: int) -> int:
        """First-fit allocation; returns the payload offset."""
        if size <= 0:
            raise ZeroSize(f"allocation of {size} bytes", self.name or None)
        if size > SIZE_CAP:
            raise Overflow(f"allocation of {size} bytes exceeds the "
                           f"32-bit address space", self.name or None)
        need = _round8(size)
        # walk the free list head -> tail: most to least recently freed
        p = self.free_head
        while p != NIL:
            have = self._size(p)
            if have >= need:
                self._list_remove(p)
                got = self._carve(p, have, need)
                self._finish_alloc(p, got)
                return p
            p = self._next(p)
        # no fit: a new block is created at the end of the heap
        new_extent = self.extent + need + OVERHEAD
        if new_extent > self.limit:
            raise MemoryExhaustionFault(size, self.extent, self.limit,
                                        self.name or None)
        p = self.extent + 4
        self._buf.extend(bytes(need + OVERHEAD))
        self.extent = new_extent
        if new_extent > self.peak_extent:
            self.peak_extent = new_extent
        self._set_tags(p, need, True)
        self._finish_alloc(p, need)
        return p

    def deallocate(self, address: int):
        """Free a payload address, coalescing with both neighbors."""
        self._check_live(address)
        size = self._size(address)
        self._live.discard(address)
        self.allocated_bytes -= size
        self.free_count += 1
        start, total = self._coalesce_both(address, size)
        self._set_tags(start, total, False)
        self._list_push_front(start)

    def reallocate(self, address: int, new_size: int) -> int:
        """Resize an allocation, in place when the layout allows it."""
        self._check_live(address)
        if new_size <= 0:
            raise ZeroSize(f"reallocation to {new_size} bytes",
                           self.name or None)
        if new_size > SIZE_CAP:
            raise Overflow(f"reallocation to {new_size} bytes exceeds the "
                           f"32-bit address space", self.name or None)
        self.realloc_count += 1
        need = _round8(new_size)
        cur = self._size(address)
        if need == cur:
            return address
        if need < cur:
            spare = cur - need
            if spare >= MIN_BLOCK:
                # shrink in place; the tail becomes a free block (merged
                # with a free successor so coalescing stays total)
                self._set_tags(address, need, True)
                rem = address + need + OVERHEAD
                rem_size = spare - OVERHEAD
                total = self._absorb_successor(rem, rem_size)
                self._set_tags(rem, total, False)
                self._list_push_front(rem)
                self.allocated_bytes -= spare
            return address
        succ = self._successor(address, cur)
        if succ != -1 and not self._is_allocated(succ):
            combined = cur + OVERHEAD + self._size(succ)
            if combined >= need:
                # grow in place: absorb the free successor, split remainder
                self._list_remove(succ)
                got = self._carve(address, combined, need)
                self.allocated_bytes += got - cur
                self._note_peaks()
                return address
        # no in-place path: allocate fresh, copy, release the original
        new_addr = self.allocate(new_size)
        keep = min(cur, need)
        self._buf[new_addr:new_addr + keep] = self._buf[address:address + keep]
        self.deallocate(address)
        return new_addr

    def allocate_zeroed(self, count: int, size: int) -> int:
        """calloc: allocate count*size bytes, zero-filled."""
        if count < 0 or size < 0:
            raise Overflow(f"allocate_zeroed({count}, {size})",
                           self.name or None)
        total = count * size
        if total > SIZE_CAP:
            raise Overflow(
                f"allocate_zeroed({count}, {size}) overflows: {total} bytes",
                self.name or None)
        if total == 0:
            total = MIN_PAYLOAD
        addr = self.allocate(total)
        rounded = self._size(addr)
        self._buf[addr:addr + rounded] = bytes(rounded)
        return addr

    def stats(self) -> dict:
        """Pure read of occupancy, free-space shape, and counters."""
        free_count = 0
        largest = 0
        total_free = 0
        p = self.free_head
        while p != NIL:
            s = self._size(p)
            free_count += 1
            total_free += s
            if s > largest:
                largest = s
            p = self._next(p)
        frag = 0.0 if total_free == 0 else 1.0 - largest / total_free
        return {
            "allocated_bytes": self.allocated_bytes,
            "extent": self.extent,
            "free_block_count": free_count,
            "largest_free_payload": largest,
            "fragmentation": frag,
            "peak_allocated": self.peak_allocated,
            "peak_extent": self.peak_extent,
            "alloc_count": self.alloc_count,
            "free_count": self.free_count,
            "realloc_count": self.realloc_count,
        }

    # -- payload data access -------------------------------------------------

    def write(self, address: int, data: bytes, offset: int = 0):
        self._check_live(address)
        size = self._size(address)
        if offset < 0 or offset + len(data) > size:
            raise ValueError(
                f"write of {len(data)} bytes at offset {offset} exceeds "
                f"payload of {size} bytes")
        self._buf[address + offset:address + offset + len(data)] = data

    def read(self, address: int, n: int, offset: int = 0) -> bytes:
        self._check_live(address)
        size = self._size(address)
        if offset < 0 or offset + n > size:
            raise ValueError(
                f"read of {n} bytes at offset {offset} exceeds "
                f"payload of {size} bytes")
        return bytes(self._buf[address + offset:address + offset + n])

    def payload_size(self, address: int) -> int:
        self._check_live(address)
        return self._size(address)

    # -- invocation peak tracking (transient-memory telemetry) ----------------

    def mark_invocation(self):
        self._invocation_peak = self.allocated_bytes

    @property
    def invocation_peak(self) -> int:
        return self._invocation_peak

    # -- validation (tests and debugging) --------------------------------------

    def check_invariants(self):
        """Walk the whole heap and verify every structural invariant."""
        seen_free = set()
        off = 0
        prev_free = False
        while off < self.extent:
            p = off + 4
            word = self._read(off)
            size = word & ~7
            allocated = bool(word & 1)
            assert size >= MIN_PAYLOAD and size % 8 == 0, \
                f"bad payload size {size} at {p}"
            assert p % 8 == 4, f"payload {p} not aligned (base offset 4)"
            footer = self._read(p + size)
            assert footer == word, f"header/footer mismatch at {p}"
            if allocated:
                assert p in self._live, f"allocated block {p} not tracked"
                prev_free = False
            else:
                assert p not in self._live, f"free block {p} tracked live"
                assert not prev_free, f"adjacent free blocks at {p}"
                seen_free.add(p)
                prev_free = True
            off = p + size + 4
        assert off == self.extent, "blocks do not tile the extent exactly"
        # free list holds exactly the free blocks, each once, links intact
        listed = set()
        p = self.free_head
        prev = NIL
        while p != NIL:
            assert p in seen_free, f"list entry {p} is not a free block"
            assert p not in listed, f"free block {p} listed twice"
            assert self._prev(p) == prev, f"broken prev link at {p}"
            listed.add(p)
            prev = p
            p = self._next(p)
        assert listed == seen_free, "free list does not match free blocks"
        assert self.allocated_bytes == sum(self._size(q) for q in self._live)

    # -- internals ---------------------------------------------------------------

    def _check_live(self, address):
        if address not in self._live:
            raise InvalidFree(f"address {address} is not a live allocation",
                              self.name or None)

    def _finish_alloc(self, p: int, size: int):
        self._live.add(p)
        self.allocated_bytes += size
        self.alloc_count += 1
        self._note_peaks()

    def _carve(self, p: int, have: int, need: int) -> int:
        """Tag block p allocated, splitting the tail into a new free block
        when the remainder can hold one. Returns the allocated payload size."""
        spare = have - need
        if spare >= MIN_BLOCK:
            self._set_tags(p, need, True)
            rem = p + need + OVERHEAD
            self._set_tags(rem, spare - OVERHEAD, False)
            self._list_push_front(rem)
            return need
        self._set_tags(p, have, True)
        return have

    def _coalesce_both(self, p: int, size: int):
        """Merge a block being freed with free neighbors on both sides.
        Removes absorbed neighbors from the list; returns (start, payload).
        Tags are not written here."""
        start, total = p, size
        if p > 4:
            pred_word = self._read(p - 8)   # predecessor's footer
            if not pred_word & 1:
                pred_size = pred_word & ~7
                pred = p - OVERHEAD - pred_size
                self._list_remove(pred)
                start = pred
                total += pred_size + OVERHEAD
        total = self._absorb_successor(start, total)
        return start, total

    def _absorb_successor(self, p: int, size: int) -> int:
        """If the block after (p, size) is free, unlink it and return the
        payload size of the merged span; otherwise return size."""
        succ = self._successor(p, size)
        if succ != -1 and not self._is_allocated(succ):
            self._list_remove(succ)
            return size + OVERHEAD + self._size(succ)
        return size

    def _note_peaks(self):
        if self.allocated_bytes > self.peak_allocated:
            self.peak_allocated = self.allocated_bytes
        if self.allocated_bytes > self._invocation_peak:
            self._invocation_peak = self.allocated_bytes
