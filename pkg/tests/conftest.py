# keeps the tests directory importable (reference_heap, run helpers)
