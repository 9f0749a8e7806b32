"""Pure-Python overlay kernels, used when the compiled extension is unavailable."""

import numpy as np


def accumulate_elevation(ix0, ix1, iy0, iy1, heights, ncols, nrows):
    diff = [[0] * (ncols + 1) for _ in range(nrows + 1)]
    for a, b, c, d, h in zip(ix0, ix1, iy0, iy1, heights):
        a, b, c, d, h = int(a), int(b), int(c), int(d), int(h)
        diff[c][a] += h
        diff[c][b] -= h
        diff[d][a] -= h
        diff[d][b] += h
    out = [[0] * ncols for _ in range(nrows)]
    for j in range(nrows):
        run = 0
        row, drow = out[j], diff[j]
        prev = out[j - 1] if j > 0 else None
        for i in range(ncols):
            run += drow[i]
            row[i] = run + prev[i] if prev is not None else run
    return np.array(out, dtype=np.int64).reshape(nrows, ncols)


def label_components(mask, wrap_x):
    nrows, ncols = len(mask), (len(mask[0]) if len(mask) else 0)
    m = [[bool(v) for v in row] for row in mask]
    labels = [[-1] * ncols for _ in range(nrows)]
    cur = 0
    for sr in range(nrows):
        for sc in range(ncols):
            if not m[sr][sc] or labels[sr][sc] >= 0:
                continue
            labels[sr][sc] = cur
            stack = [(sr, sc)]
            while stack:
                r, c = stack.pop()
                for rr, cc in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)):
                    if rr < 0 or rr >= nrows:
                        continue
                    if cc < 0 or cc >= ncols:
                        if not wrap_x or ncols < 2:
                            continue
                        cc = ncols - 1 if cc < 0 else 0
                    if m[rr][cc] and labels[rr][cc] < 0:
                        labels[rr][cc] = cur
                        stack.append((rr, cc))
            cur += 1
    return np.array(labels, dtype=np.int64).reshape(nrows, ncols), cur
