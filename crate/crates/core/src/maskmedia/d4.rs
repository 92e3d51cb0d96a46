use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{MaskError, Patch};

/// The eight axis-aligned symmetries of a square.
///
/// Each transform is a pure pixel permutation of a `side`×`side` patch. The
/// source pixel at `(row, col)` moves to:
///
/// | transform      | destination                      |
/// |----------------|----------------------------------|
/// | `Identity`     | `(row, col)`                     |
/// | `Rot90`        | `(col, side-1-row)` (clockwise)  |
/// | `Rot180`       | `(side-1-row, side-1-col)`       |
/// | `Rot270`       | `(side-1-col, row)`              |
/// | `FlipH`        | `(row, side-1-col)`              |
/// | `FlipV`        | `(side-1-row, col)`              |
/// | `FlipHRot90`   | `(col, row)` (flip-h after rot90)|
/// | `FlipVRot90`   | `(side-1-col, side-1-row)`       |
///
/// The declaration order is the canonical order used for tie-breaking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum D4Transform {
    Identity,
    Rot90,
    Rot180,
    Rot270,
    FlipH,
    FlipV,
    FlipHRot90,
    FlipVRot90,
}

impl D4Transform {
    pub const ALL: [D4Transform; 8] = [
        D4Transform::Identity,
        D4Transform::Rot90,
        D4Transform::Rot180,
        D4Transform::Rot270,
        D4Transform::FlipH,
        D4Transform::FlipV,
        D4Transform::FlipHRot90,
        D4Transform::FlipVRot90,
    ];

    pub fn name(self) -> &'static str {
        match self {
            D4Transform::Identity => "identity",
            D4Transform::Rot90 => "rot90",
            D4Transform::Rot180 => "rot180",
            D4Transform::Rot270 => "rot270",
            D4Transform::FlipH => "flip_h",
            D4Transform::FlipV => "flip_v",
            D4Transform::FlipHRot90 => "flip_h_rot90",
            D4Transform::FlipVRot90 => "flip_v_rot90",
        }
    }

    /// Position in [`ALL`](Self::ALL).
    pub fn ordinal(self) -> usize {
        self as usize
    }

    // (swap axes, then mirror rows, then mirror cols)
    fn parts(self) -> (bool, bool, bool) {
        match self {
            D4Transform::Identity => (false, false, false),
            D4Transform::Rot90 => (true, false, true),
            D4Transform::Rot180 => (false, true, true),
            D4Transform::Rot270 => (true, true, false),
            D4Transform::FlipH => (false, false, true),
            D4Transform::FlipV => (false, true, false),
            D4Transform::FlipHRot90 => (true, false, false),
            D4Transform::FlipVRot90 => (true, true, true),
        }
    }

    /// Destination of source pixel `(row, col)` in a `side`×`side` square.
    #[inline]
    pub fn map(self, row: u32, col: u32, side: u32) -> (u32, u32) {
        let (swap, mirror_r, mirror_c) = self.parts();
        let (r, c) = if swap { (col, row) } else { (row, col) };
        let r = if mirror_r { side - 1 - r } else { r };
        let c = if mirror_c { side - 1 - c } else { c };
        (r, c)
    }

    /// `self ∘ other`: apply `other` first, then `self`.
    pub fn compose(self, other: D4Transform) -> D4Transform {
        const PROBE: u32 = 3;
        D4Transform::ALL
            .into_iter()
            .find(|cand| {
                (0..PROBE).all(|r| {
                    (0..PROBE).all(|c| {
                        let (r1, c1) = other.map(r, c, PROBE);
                        self.map(r1, c1, PROBE) == cand.map(r, c, PROBE)
                    })
                })
            })
            .expect("D4 is closed under composition")
    }

    pub fn inverse(self) -> D4Transform {
        D4Transform::ALL
            .into_iter()
            .find(|cand| cand.compose(self) == D4Transform::Identity)
            .expect("every D4 element has an inverse")
    }
}

impl fmt::Display for D4Transform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for D4Transform {
    type Err = MaskError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        D4Transform::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| MaskError::InvalidParameter(format!("unknown transform {s:?}")))
    }
}

/// Applies `t` to a square patch as an exact pixel permutation.
pub fn d4_apply(patch: &Patch, t: D4Transform) -> Patch {
    let side = patch.side();
    let mut out = patch.clone();
    for row in 0..side {
        for col in 0..side {
            let (r, c) = t.map(row, col, side);
            out.put(r, c, patch.get(row, col));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn marker_patch(side: u32, row: u32, col: u32) -> Patch {
        let mut p = Patch::new(side, vec![0; (side * side * 3) as usize]).unwrap();
        p.put(row, col, [255, 255, 255]);
        p
    }

    fn marker_position(p: &Patch) -> (u32, u32) {
        for r in 0..p.side() {
            for c in 0..p.side() {
                if p.get(r, c) == [255, 255, 255] {
                    return (r, c);
                }
            }
        }
        panic!("no marker");
    }

    #[test]
    fn examples() {
        let p = marker_patch(4, 0, 0);
        assert_eq!(d4_apply(&d4_apply(&p, D4Transform::Rot180), D4Transform::Rot180), p);
        assert_eq!(marker_position(&d4_apply(&p, D4Transform::FlipH)), (0, 3));
        // (row, col) -> (col, side-1-row)
        assert_eq!(marker_position(&d4_apply(&p, D4Transform::Rot90)), (0, 3));
        let q = marker_patch(4, 1, 0);
        assert_eq!(marker_position(&d4_apply(&q, D4Transform::Rot90)), (0, 2));
        assert_eq!(marker_position(&d4_apply(&q, D4Transform::Rot270)), (3, 1));
    }

    #[test]
    fn named_compositions() {
        use D4Transform::*;
        assert_eq!(Rot90.compose(Rot90), Rot180);
        assert_eq!(Rot90.compose(Rot180), Rot270);
        assert_eq!(FlipH.compose(Rot90), FlipHRot90);
        assert_eq!(FlipV.compose(Rot90), FlipVRot90);
        assert_eq!(Rot90.inverse(), Rot270);
        assert_eq!(FlipHRot90.inverse(), FlipHRot90);
    }

    #[test]
    fn group_closure_and_distinctness() {
        let mut seen = std::collections::HashSet::new();
        for a in D4Transform::ALL {
            seen.insert((0..3).flat_map(|r| (0..3).map(move |c| a.map(r, c, 3))).collect::<Vec<_>>());
            for b in D4Transform::ALL {
                assert!(D4Transform::ALL.contains(&a.compose(b)));
                // associativity with every third element
                for c in D4Transform::ALL {
                    assert_eq!(a.compose(b).compose(c), a.compose(b.compose(c)));
                }
            }
            assert_eq!(a.compose(a.inverse()), D4Transform::Identity);
        }
        assert_eq!(seen.len(), 8);
    }

    #[test]
    fn names_roundtrip() {
        for t in D4Transform::ALL {
            assert_eq!(t.name().parse::<D4Transform>().unwrap(), t);
            assert_eq!(serde_json::to_string(&t).unwrap(), format!("\"{}\"", t.name()));
        }
        assert!("rot45".parse::<D4Transform>().is_err());
    }

    proptest! {
        #[test]
        fn transform_then_inverse_is_identity(
            side in 1u32..9,
            seed in proptest::collection::vec(any::<u8>(), 243),
            ti in 0usize..8,
            tj in 0usize..8,
        ) {
            let n = (side * side * 3) as usize;
            let p = Patch::new(side, seed[..n].to_vec()).unwrap();
            let t = D4Transform::ALL[ti];
            let u = D4Transform::ALL[tj];
            prop_assert_eq!(d4_apply(&d4_apply(&p, t), t.inverse()), p.clone());
            prop_assert_eq!(d4_apply(&d4_apply(&p, u), t), d4_apply(&p, t.compose(u)));
        }
    }
}
