"""Bisection on the edge of a one-dimensional acceptance region."""


def bisect_edge(accept, inside, outside, tol):
    """Shrink ``[inside, outside]`` around the point where ``accept`` flips.

    ``accept(inside)`` must be true and ``accept(outside)`` false; the two
    may be in either order on the real line. Returns the final
    ``(inside, outside)`` pair, which are at most ``tol`` apart.
    """
    while abs(outside - inside) > tol:
        mid = 0.5 * (inside + outside)
        if mid == inside or mid == outside:
            break
        if accept(mid):
            inside = mid
        else:
            outside = mid
    return inside, outside
