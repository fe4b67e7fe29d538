"""Brute-force reference allocator used as the oracle for the heap model.

Implements the same written policies as swarmsim.heap.HeapImage, but with
plain Python data structures and linear scans instead of boundary tags
and threaded links: blocks live in an address-ordered list, the free list
is a Python list of offsets (index 0 is the head). Addresses, faults,
extent, and stats must match the real allocator exactly.
"""

from swarmsim.faults import InvalidFree, MemoryExhaustionFault, Overflow, ZeroSize

MIN_BLOCK = 16
OVERHEAD = 8
SIZE_CAP = 1 << 31


def _round8(n):
    return (n + 7) & ~7


class Block:
    __slots__ = ("offset", "size", "allocated")

    def __init__(self, offset, size, allocated):
        self.offset = offset      # payload offset
        self.size = size          # payload size
        self.allocated = allocated


class ReferenceHeap:
    def __init__(self, limit):
        self.limit = limit
        self.blocks = []          # address order
        self.free_list = []       # payload offsets, head first
        self.extent = 0
        self.allocated_bytes = 0
        self.peak_allocated = 0
        self.peak_extent = 0
        self.alloc_count = 0
        self.free_count = 0
        self.realloc_count = 0

    # -- helpers -----------------------------------------------------------

    def _find(self, offset):
        for i, b in enumerate(self.blocks):
            if b.offset == offset:
                return i
        return -1

    def _bump_alloc(self, size):
        self.allocated_bytes += size
        self.alloc_count += 1
        self.peak_allocated = max(self.peak_allocated, self.allocated_bytes)

    # -- operations ----------------------------------------------------------

    def allocate(self, size):
        if size <= 0:
            raise ZeroSize(f"allocation of {size} bytes")
        if size > SIZE_CAP:
            raise Overflow(f"allocation of {size} bytes")
        need = _round8(size)
        for off in self.free_list:
            i = self._find(off)
            b = self.blocks[i]
            if b.size >= need:
                self.free_list.remove(off)
                self._carve(i, need)
                self._bump_alloc(self.blocks[i].size)
                return b.offset
        new_extent = self.extent + need + OVERHEAD
        if new_extent > self.limit:
            raise MemoryExhaustionFault(size, self.extent, self.limit)
        off = self.extent + 4
        self.blocks.append(Block(off, need, True))
        self.extent = new_extent
        self.peak_extent = max(self.peak_extent, self.extent)
        self._bump_alloc(need)
        return off

    def deallocate(self, offset):
        i = self._find(offset)
        if i < 0 or not self.blocks[i].allocated:
            raise InvalidFree(f"address {offset}")
        b = self.blocks[i]
        self.allocated_bytes -= b.size
        self.free_count += 1
        b.allocated = False
        i = self._merge_neighbors(i)
        self.free_list.insert(0, self.blocks[i].offset)

    def reallocate(self, offset, new_size):
        i = self._find(offset)
        if i < 0 or not self.blocks[i].allocated:
            raise InvalidFree(f"address {offset}")
        if new_size <= 0:
            raise ZeroSize(f"reallocation to {new_size} bytes")
        if new_size > SIZE_CAP:
            raise Overflow(f"reallocation to {new_size} bytes")
        self.realloc_count += 1
        need = _round8(new_size)
        b = self.blocks[i]
        cur = b.size
        if need == cur:
            return offset
        if need < cur:
            spare = cur - need
            if spare >= MIN_BLOCK:
                b.size = need
                rem = Block(offset + need + OVERHEAD, spare - OVERHEAD, False)
                self.blocks.insert(i + 1, rem)
                j = self._absorb_next(i + 1)
                self.free_list.insert(0, self.blocks[j].offset)
                self.allocated_bytes -= spare
            return offset
        if i + 1 < len(self.blocks) and not self.blocks[i + 1].allocated:
            succ = self.blocks[i + 1]
            combined = cur + OVERHEAD + succ.size
            if combined >= need:
                self.free_list.remove(succ.offset)
                del self.blocks[i + 1]
                spare = combined - need
                if spare >= MIN_BLOCK:
                    b.size = need
                    rem = Block(offset + need + OVERHEAD, spare - OVERHEAD, False)
                    self.blocks.insert(i + 1, rem)
                    self.free_list.insert(0, rem.offset)
                    self.allocated_bytes += need - cur
                else:
                    b.size = combined
                    self.allocated_bytes += combined - cur
                self.peak_allocated = max(self.peak_allocated,
                                          self.allocated_bytes)
                return offset
        new_off = self.allocate(new_size)
        self.deallocate(offset)
        return new_off

    def allocate_zeroed(self, count, size):
        if count < 0 or size < 0:
            raise Overflow(f"allocate_zeroed({count}, {size})")
        total = count * size
        if total > SIZE_CAP:
            raise Overflow(f"allocate_zeroed({count}, {size})")
        if total == 0:
            total = 8
        return self.allocate(total)

    def stats(self):
        free_sizes = [self.blocks[self._find(off)].size
                      for off in self.free_list]
        total_free = sum(free_sizes)
        largest = max(free_sizes, default=0)
        frag = 0.0 if total_free == 0 else 1.0 - largest / total_free
        return {
            "allocated_bytes": self.allocated_bytes,
            "extent": self.extent,
            "free_block_count": len(free_sizes),
            "largest_free_payload": largest,
            "fragmentation": frag,
            "peak_allocated": self.peak_allocated,
            "peak_extent": self.peak_extent,
            "alloc_count": self.alloc_count,
            "free_count": self.free_count,
            "realloc_count": self.realloc_count,
        }

    # -- internals ------------------------------------------------------------

    def _carve(self, i, need):
        b = self.blocks[i]
        spare = b.size - need
        if spare >= MIN_BLOCK:
            b.size = need
            b.allocated = True
            rem = Block(b.offset + need + OVERHEAD, spare - OVERHEAD, False)
            self.blocks.insert(i + 1, rem)
            self.free_list.insert(0, rem.offset)
        else:
            b.allocated = True

    def _merge_neighbors(self, i):
        if i + 1 < len(self.blocks) and not self.blocks[i + 1].allocated:
            succ = self.blocks[i + 1]
            self.free_list.remove(succ.offset)
            self.blocks[i].size += OVERHEAD + succ.size
            del self.blocks[i + 1]
        if i > 0 and not self.blocks[i - 1].allocated:
            pred = self.blocks[i - 1]
            self.free_list.remove(pred.offset)
            pred.size += OVERHEAD + self.blocks[i].size
            del self.blocks[i]
            i -= 1
        return i

    def _absorb_next(self, i):
        if i + 1 < len(self.blocks) and not self.blocks[i + 1].allocated:
            succ = self.blocks[i + 1]
            self.free_list.remove(succ.offset)
            self.blocks[i].size += OVERHEAD + succ.size
            del self.blocks[i + 1]
        return i
