# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled timeout list core. Behaviour must match ``_tom_py`` exactly."""

from libc.stdlib cimport malloc, realloc, free

from dirnet._tom_py import TomClosedError


cdef struct entry_t:
    int kind
    int subid
    long long deadline
    long long expiry
    bint cyclic
    bint suspended


cdef class TimeoutCore:
    cdef entry_t* _buf
    cdef Py_ssize_t _n
    cdef Py_ssize_t _cap
    cdef long long _now
    cdef bint _closed

    def __cinit__(self, long long now=0):
        self._cap = 16
        self._n = 0
        self._buf = <entry_t*> malloc(self._cap * sizeof(entry_t))
        if self._buf == NULL:
            raise MemoryError()
        self._now = now
        self._closed = False

    def __dealloc__(self):
        if self._buf != NULL:
            free(self._buf)

    @property
    def now(self):
        return self._now

    @property
    def closed(self):
        return self._closed

    def __len__(self):
        return self._n

    cdef Py_ssize_t _find(self, int kind, int subid):
        cdef Py_ssize_t i
        for i in range(self._n):
            if self._buf[i].kind == kind and self._buf[i].subid == subid:
                return i
        return -1

    cdef Py_ssize_t _argmin(self):
        cdef Py_ssize_t i, best = -1
        cdef entry_t* e
        cdef entry_t* b
        for i in range(self._n):
            e = &self._buf[i]
            if best < 0:
                best = i
                continue
            b = &self._buf[best]
            if (e.expiry < b.expiry
                    or (e.expiry == b.expiry and (e.kind < b.kind
                        or (e.kind == b.kind and e.subid < b.subid)))):
                best = i
        return best

    cdef void _remove(self, Py_ssize_t i):
        self._n -= 1
        if i != self._n:
            self._buf[i] = self._buf[self._n]

    def _insert(self, int kind, int subid, long long deadline, bint cyclic):
        cdef entry_t* grown
        if self._closed:
            raise TomClosedError("timeout list is closed")
        if self._find(kind, subid) >= 0:
            return False
        if self._n == self._cap:
            grown = <entry_t*> realloc(self._buf, 2 * self._cap * sizeof(entry_t))
            if grown == NULL:
                raise MemoryError()
            self._buf = grown
            self._cap *= 2
        self._buf[self._n].kind = kind
        self._buf[self._n].subid = subid
        self._buf[self._n].deadline = deadline
        self._buf[self._n].expiry = self._now + deadline
        self._buf[self._n].cyclic = cyclic
        self._buf[self._n].suspended = False
        self._n += 1
        return True

    cpdef bint renew(self, int kind, int subid):
        cdef Py_ssize_t i
        if self._closed:
            return False
        i = self._find(kind, subid)
        if i < 0 or self._buf[i].suspended:
            return False
        self._buf[i].expiry = self._now + self._buf[i].deadline
        return True

    cpdef bint delete(self, int kind, int subid):
        cdef Py_ssize_t i
        if self._closed:
            return False
        i = self._find(kind, subid)
        if i < 0:
            return False
        self._remove(i)
        return True

    cpdef bint is_present(self, int kind, int subid):
        return self._find(kind, subid) >= 0

    def next_expiry(self):
        cdef Py_ssize_t i
        if self._closed or self._n == 0:
            return None
        i = self._argmin()
        return self._buf[i].expiry

    cpdef list advance(self, long long dt):
        cdef long long target
        cdef Py_ssize_t i
        cdef list fired = []
        if dt < 0:
            raise ValueError(f"negative advance: {dt}")
        if self._closed:
            return fired
        target = self._now + dt
        while self._n > 0:
            i = self._argmin()
            if self._buf[i].expiry > target:
                break
            fired.append((self._buf[i].kind, self._buf[i].subid))
            if self._buf[i].cyclic:
                self._buf[i].expiry += self._buf[i].deadline
            else:
                self._remove(i)
        self._now = target
        return fired

    def close(self):
        self._closed = True

    def _entries(self):
        cdef Py_ssize_t i
        rows = []
        for i in range(self._n):
            e = self._buf[i]
            rows.append((e.kind, e.subid, e.deadline, e.expiry,
                         bool(e.cyclic), bool(e.suspended)))
        rows.sort(key=lambda r: (r[3], r[0], r[1]))
        return rows
