"""Pure-Python twin of ``_kernels.pyx`` (used when the extension is missing)."""

import math

BACKEND = "python"

INSERT, REVISIT, NO_CHILD = 0, 1, 2
VALUE_RATIO, VALUE_LOG_OFFSET = 0, 1

_NEG_INF = -math.inf


def _estimate(vstar, pol, pol_star, mode):
    if vstar == _NEG_INF:
        return _NEG_INF
    if pol_star == 0.0:
        return vstar
    r = pol / pol_star
    if mode == VALUE_RATIO:
        return vstar * r
    if r <= 0.0:
        return _NEG_INF
    return vstar + math.log(r)


def select_token(node, children, policy, n, v, d, depth, cont, C, d_min, mode, max_content, eos):
    row = children[node].tolist()
    if depth[node] >= max_content:
        candidates = range(eos, eos + 1)
    else:
        candidates = range(len(row))

    ystar = -1
    vstar = _NEG_INF
    for y in candidates:
        c = row[y]
        if c >= 0 and (ystar < 0 or v[c] > vstar):
            ystar = y
            vstar = float(v[c])

    if ystar < 0:
        y = int(cont[node])
        if y < 0:
            return -1
        if d_min >= 0 and depth[node] + 1 <= d_min:
            return -1
        return y

    pol = policy[node].tolist()
    sqrt_n = math.sqrt(float(n[node]))
    base_depth = int(depth[node]) + 1
    best = -1
    best_u = _NEG_INF
    for y in candidates:
        c = row[y]
        if c >= 0:
            dd = int(d[c])
            nv = int(n[c])
            vb = float(v[c])
        else:
            dd = base_depth
            nv = 0
            vb = _estimate(vstar, pol[y], pol[ystar], mode)
        if d_min >= 0 and dd <= d_min:
            continue
        u = vb + C * sqrt_n / (1.0 + nv) * pol[y]
        if best < 0 or u > best_u:
            best = y
            best_u = u
    return best


def descend(root, children, policy, n, v, d, depth, cont, flags, C, d_min, mode, max_content, eos, path):
    node = root
    length = 0
    while True:
        path[length] = node
        length += 1
        if flags[node] != 0:
            return REVISIT, length, -1
        tok = select_token(node, children, policy, n, v, d, depth, cont, C, d_min, mode, max_content, eos)
        if tok < 0:
            return NO_CHILD, length, -1
        child = int(children[node, tok])
        if child < 0:
            return INSERT, length, tok
        node = child


def backup(leaf, root, parent, n, v, d, witness):
    child = leaf
    while child != root:
        node = int(parent[child])
        n[node] += 1
        if v[child] > v[node]:
            v[node] = v[child]
            witness[node] = witness[child]
        if d[child] > d[node]:
            d[node] = d[child]
        child = node
