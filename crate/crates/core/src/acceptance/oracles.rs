//! Brute-force reference computations, kept independent of the code they check.

use std::collections::BTreeSet;

use crate::freenc::{all_words, NCSeries, RankAccumulator};
use crate::qseries::Rational;

/// Number of connected trivalent graphs of type `(g, n)` up to isomorphism
/// fixing tail numbers, by pairing the half-edge slots of `2g - 2 + n`
/// three-slot vertices in every possible way.
pub fn trivalent_count_by_pairing(g: u32, n: u32) -> usize {
    let v = (2 * g + n) as usize - 2;
    let slots = 3 * v;
    let mut seen = BTreeSet::new();
    let mut tails = vec![usize::MAX; n as usize];
    let mut used = vec![false; slots];
    place_tails(0, &mut tails, &mut used, v, &mut seen);
    seen.len()
}

fn place_tails(t: usize, tails: &mut Vec<usize>, used: &mut Vec<bool>, v: usize, seen: &mut BTreeSet<Key>) {
    if t == tails.len() {
        let free: Vec<usize> = (0..used.len()).filter(|&s| !used[s]).collect();
        let mut pairs = Vec::new();
        match_slots(&free, &mut pairs, tails, v, seen);
        return;
    }
    for s in 0..used.len() {
        if !used[s] {
            used[s] = true;
            tails[t] = s;
            place_tails(t + 1, tails, used, v, seen);
            used[s] = false;
        }
    }
}

fn match_slots(free: &[usize], pairs: &mut Vec<(usize, usize)>, tails: &[usize], v: usize, seen: &mut BTreeSet<Key>) {
    if free.is_empty() {
        if let Some(k) = canonical_key(pairs, tails, v) {
            seen.insert(k);
        }
        return;
    }
    let first = free[0];
    for i in 1..free.len() {
        let rest: Vec<usize> = free[1..].iter().copied().filter(|&s| s != free[i]).collect();
        pairs.push((first, free[i]));
        match_slots(&rest, pairs, tails, v, seen);
        pairs.pop();
    }
}

/// Edge multiplicities (upper triangle, loops on the diagonal) and tail vertices.
type Key = (Vec<usize>, Vec<usize>);

fn canonical_key(pairs: &[(usize, usize)], tails: &[usize], v: usize) -> Option<Key> {
    let mut mult = vec![vec![0usize; v]; v];
    let mut parent: Vec<usize> = (0..v).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        if p[x] != x {
            let r = find(p, p[x]);
            p[x] = r;
        }
        p[x]
    }
    for &(a, b) in pairs {
        let (x, y) = (a / 3, b / 3);
        mult[x][y] += 1;
        if x != y {
            mult[y][x] += 1;
        }
        let (rx, ry) = (find(&mut parent, x), find(&mut parent, y));
        parent[rx] = ry;
    }
    let root = find(&mut parent, 0);
    if (0..v).any(|x| find(&mut parent, x) != root) {
        return None;
    }
    let tail_vertex: Vec<usize> = tails.iter().map(|s| s / 3).collect();
    let mut best: Option<Key> = None;
    for perm in permutations(v) {
        // perm[old] = new
        let mut m = vec![vec![0usize; v]; v];
        for x in 0..v {
            for y in 0..v {
                m[perm[x]][perm[y]] = mult[x][y];
            }
        }
        let flat: Vec<usize> = (0..v).flat_map(|x| (x..v).map(move |y| (x, y))).map(|(x, y)| m[x][y]).collect();
        let key = (flat, tail_vertex.iter().map(|&x| perm[x]).collect());
        if best.as_ref().is_none_or(|b| key < *b) {
            best = Some(key);
        }
    }
    best
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..n {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

/// Left-normed bracket `[[x1, x2], .., xk]`.
pub fn left_normed(w: &[u8], r: usize, m: usize) -> NCSeries<Rational> {
    let mut acc = NCSeries::letter(r, m, w[0]);
    for &l in &w[1..] {
        acc = acc.bracket(&NCSeries::letter(r, m, l)).expect("same algebra");
    }
    acc
}

/// `dim L_k` as the rank of all left-normed brackets of length `k`.
pub fn lie_dim_by_span(r: usize, k: usize) -> usize {
    let mut acc = RankAccumulator::new();
    for w in all_words(r, k) {
        acc.insert_series(&left_normed(&w, r, k));
    }
    acc.rank()
}

/// `dim [L^2, L^2]_k` as the rank of all brackets of two left-normed
/// brackets of lengths `i, j >= 2` with `i + j = k`.
pub fn derived_square_dim_by_span(r: usize, k: usize) -> usize {
    let mut acc = RankAccumulator::new();
    for i in 2..k {
        let j = k - i;
        if j < i {
            break;
        }
        let left: Vec<_> = all_words(r, i).iter().map(|w| left_normed(w, r, k)).collect();
        let right: Vec<_> = all_words(r, j).iter().map(|w| left_normed(w, r, k)).collect();
        for u in &left {
            for v in &right {
                acc.insert_series(&u.bracket(v).expect("same algebra"));
            }
        }
    }
    acc.rank()
}

/// `(dim Log_k, dim Pol_k)` from the bracket spans.
pub fn polylog_dims_by_span(r: usize, k: usize) -> (usize, usize) {
    if k == 1 {
        return (0, r);
    }
    let d = lie_dim_by_span(r, k) - derived_square_dim_by_span(r, k);
    (d, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_counts() {
        assert_eq!(trivalent_count_by_pairing(0, 3), 1);
        assert_eq!(trivalent_count_by_pairing(1, 1), 1);
        assert_eq!(trivalent_count_by_pairing(0, 4), 3);
        assert_eq!(trivalent_count_by_pairing(2, 0), 2);
    }

    #[test]
    fn bracket_spans() {
        assert_eq!(lie_dim_by_span(2, 3), 2);
        assert_eq!(lie_dim_by_span(3, 2), 3);
        assert_eq!(derived_square_dim_by_span(2, 4), 0);
        assert_eq!(derived_square_dim_by_span(2, 5), 2);
    }
}
