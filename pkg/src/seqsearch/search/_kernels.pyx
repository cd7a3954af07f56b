# cython: language_level=3
"""Compiled selection/backup kernels over the node arena.

Must stay operation-for-operation identical to ``_kernels_py`` so that both
backends produce bit-identical trees.
"""

from libc.math cimport sqrt, log, INFINITY
from libc.stdint cimport int64_t

BACKEND = "cython"

cdef enum:
    INSERT = 0
    REVISIT = 1
    NO_CHILD = 2

cdef enum:
    VALUE_RATIO = 0
    VALUE_LOG_OFFSET = 1


cdef inline double _estimate(double vstar, double pol, double pol_star, int mode) noexcept nogil:
    cdef double r
    if vstar == -INFINITY:
        return -INFINITY
    if pol_star == 0.0:
        return vstar
    r = pol / pol_star
    if mode == VALUE_RATIO:
        return vstar * r
    if r <= 0.0:
        return -INFINITY
    return vstar + log(r)


cdef int64_t _select_token(
    int64_t node,
    const int64_t[:, ::1] children,
    const double[:, ::1] policy,
    const int64_t[::1] n,
    const double[::1] v,
    const int64_t[::1] d,
    const int64_t[::1] depth,
    const int64_t[::1] cont,
    double C,
    int64_t d_min,
    int mode,
    int64_t max_content,
    int64_t eos,
) noexcept nogil:
    cdef int64_t V = children.shape[1]
    cdef int64_t lo = 0, hi = V
    cdef int64_t y, c, ystar = -1, best = -1, nv, dd
    cdef double vstar = -INFINITY, vb, u, best_u = -INFINITY, sqrt_n

    if depth[node] >= max_content:
        lo = eos
        hi = eos + 1

    for y in range(lo, hi):
        c = children[node, y]
        if c >= 0 and (ystar < 0 or v[c] > vstar):
            ystar = y
            vstar = v[c]

    if ystar < 0:
        # no visited child yet: follow this node's own playout
        y = cont[node]
        if y < 0:
            return -1
        if d_min >= 0 and depth[node] + 1 <= d_min:
            return -1
        return y

    sqrt_n = sqrt(<double>n[node])
    for y in range(lo, hi):
        c = children[node, y]
        if c >= 0:
            dd = d[c]
            nv = n[c]
            vb = v[c]
        else:
            dd = depth[node] + 1
            nv = 0
            vb = _estimate(vstar, policy[node, y], policy[node, ystar], mode)
        if d_min >= 0 and dd <= d_min:
            continue
        u = vb + C * sqrt_n / (1.0 + <double>nv) * policy[node, y]
        if best < 0 or u > best_u:
            best = y
            best_u = u
    return best


def select_token(int64_t node, const int64_t[:, ::1] children, const double[:, ::1] policy,
                 const int64_t[::1] n, const double[::1] v, const int64_t[::1] d,
                 const int64_t[::1] depth, const int64_t[::1] cont, double C, int64_t d_min,
                 int mode, int64_t max_content, int64_t eos):
    return _select_token(node, children, policy, n, v, d, depth, cont, C, d_min, mode, max_content, eos)


def descend(int64_t root, const int64_t[:, ::1] children, const double[:, ::1] policy,
            const int64_t[::1] n, const double[::1] v, const int64_t[::1] d,
            const int64_t[::1] depth, const int64_t[::1] cont, const signed char[::1] flags,
            double C, int64_t d_min, int mode, int64_t max_content, int64_t eos,
            int64_t[::1] path):
    """Walk from ``root`` by UCT; returns (status, path_length, token)."""
    cdef int64_t node = root, length = 0, tok = -1, child
    cdef int status
    with nogil:
        while True:
            path[length] = node
            length += 1
            if flags[node] != 0:
                status = REVISIT
                tok = -1
                break
            tok = _select_token(node, children, policy, n, v, d, depth, cont, C, d_min, mode,
                                max_content, eos)
            if tok < 0:
                status = NO_CHILD
                break
            child = children[node, tok]
            if child < 0:
                status = INSERT
                break
            node = child
    return status, length, tok

def backup(int64_t leaf, int64_t root, const int64_t[::1] parent, int64_t[::1] n,
           double[::1] v, int64_t[::1] d, int64_t[::1] witness):
    """Propagate visit counts, max values and deepest depth from ``leaf`` to ``root``."""
    cdef int64_t child = leaf, node
    with nogil:
        while child != root:
            node = parent[child]
            n[node] += 1
            if v[child] > v[node]:
                v[node] = v[child]
                witness[node] = witness[child]
            if d[child] > d[node]:
                d[node] = d[child]
            child = node
