use crate::group::{Alphabet, ReducedWord};

/// A cylinder `[stem]` on which the Radon-Nikodym derivative of `g` is
/// constant, together with `image`, the stem of g⁻¹·[stem].
///
/// Both stems end in the same letter, so g⁻¹ maps `[stem·x]` onto
/// `[image·x]` for every continuation x.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Leaf {
    pub stem: ReducedWord,
    pub image: ReducedWord,
    /// (g, ξ) in letters for ξ in the leaf.
    pub level: usize,
}

/// Partition of the boundary into the cylinders on which P_g is constant,
/// ordered by stem index within each level.
///
/// For m < |g| the leaves are g[..m]·t with t ≠ g_{m+1} (and t ≠ g_m⁻¹ when
/// m ≥ 1); for m = |g| they are g·t with t not cancelling.
pub fn leaves(alphabet: &Alphabet, g: &ReducedWord) -> Vec<Leaf> {
    let n = g.len();
    let gl = g.letters();
    let mut out = Vec::with_capacity(alphabet.size() + n * alphabet.branching());
    for m in 0..=n {
        let head = g.prefix(m);
        let tail_inv = g.suffix_from(m).inverse();
        for t in alphabet.successors(head.last()) {
            if m < n && t == gl[m] {
                continue;
            }
            let stem = head.extended(t).expect("successor");
            let image = tail_inv.extended(t).expect("t does not cancel the tail");
            out.push(Leaf { stem, image, level: m });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::{count, word_at};

    #[test]
    fn leaves_partition_the_boundary() {
        let a = Alphabet::new(2).unwrap();
        for g in crate::group::ball(&a, 4, 1 << 20).unwrap() {
            let ls = leaves(&a, &g);
            let depth = g.len() + 1;
            let mut hits = vec![0; count(&a, depth)];
            for (i, hit) in hits.iter_mut().enumerate() {
                let w = word_at(&a, depth, i);
                for l in &ls {
                    if l.stem.is_prefix_of(&w) {
                        *hit += 1;
                        // the image is g⁻¹ applied to the stem
                        assert_eq!(g.inverse().multiply(&l.stem), l.image);
                        assert_eq!(l.stem.last(), l.image.last());
                    }
                }
            }
            assert!(hits.iter().all(|&h| h == 1), "g = {g}");
        }
    }

    #[test]
    fn identity_leaves_are_the_letters() {
        let a = Alphabet::new(2).unwrap();
        let ls = leaves(&a, &ReducedWord::identity());
        assert_eq!(ls.len(), 4);
        assert!(ls.iter().all(|l| l.stem == l.image && l.level == 0));
    }
}
