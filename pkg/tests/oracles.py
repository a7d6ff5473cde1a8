"""Reference values computed without any code from the package.

Run as a script to regenerate the frozen constants used by the tests.
The chain here lives on subsets of seen coupons (2^N states) and uses exact
first-step analysis, so it shares nothing with the lattice recursion, the
alternating sum, the integrals or the inclusion-exclusion routes.
"""

from fractions import Fraction
from functools import lru_cache


def subset_chain(q, groups):
    """Return (P{group l first} for each l, E[S], E[S(S+1)]) for coupon probs q.

    ``groups[i]`` is the group label of coupon i.
    """
    n = len(q)
    full = (1 << n) - 1
    labels = sorted(set(groups))
    members = {g: sum(1 << i for i in range(n) if groups[i] == g) for g in labels}

    @lru_cache(maxsize=None)
    def first(seen, l):
        done = [g for g in labels if seen & members[g] == members[g]]
        if done:
            return Fraction(int(done[0] == l))
        stay = sum((q[i] for i in range(n) if seen >> i & 1), Fraction(0))
        acc = sum((q[i] * first(seen | 1 << i, l) for i in range(n) if not seen >> i & 1), Fraction(0))
        return acc / (1 - stay)

    @lru_cache(maxsize=None)
    def moments(seen):
        # remaining draws R from state `seen`: returns (E[R], E[R^2])
        if seen == full:
            return Fraction(0), Fraction(0)
        stay = sum((q[i] for i in range(n) if seen >> i & 1), Fraction(0))
        move = 1 - stay
        # geometric wait W with success prob `move`, then jump
        ew = 1 / move
        ew2 = (2 - move) / move**2
        e1 = e2 = Fraction(0)
        for i in range(n):
            if not seen >> i & 1:
                r1, r2 = moments(seen | 1 << i)
                w = q[i] / move
                e1 += w * r1
                e2 += w * r2
        return ew + e1, ew2 + 2 * ew * e1 + e2

    probs = [first(0, l) for l in labels]
    m1, m2 = moments(0)
    return probs, m1, m2 + m1


if __name__ == "__main__":
    q = [Fraction(1, 4)] * 2 + [Fraction(1, 2)]
    probs, mean, rising2 = subset_chain(q, [1, 1, 2])
    print("first detection:", probs)
    print("E[S] =", mean, "E[S(S+1)] =", rising2, float(rising2))
    print(subset_chain([Fraction(1, 2)] * 2, [1, 2]))
