use std::fmt;
use std::sync::Arc;

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::util::Rng;

use super::VarId;

/// A label. Plain alphabets use dense atoms; powered alphabets use views,
/// i.e. a sub-assignment on a ball sorted by variable id.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Atom(u32),
    View(Arc<[(VarId, Label)]>),
}

impl Label {
    pub fn view(mut entries: Vec<(VarId, Label)>) -> Label {
        entries.sort_by_key(|e| e.0);
        Label::View(entries.into())
    }

    pub fn as_atom(&self) -> Option<u32> {
        match self {
            Label::Atom(a) => Some(*a),
            Label::View(_) => None,
        }
    }

    /// The opinion a view holds about `w`, if `w` is in its domain.
    pub fn opinion(&self, w: VarId) -> Option<&Label> {
        match self {
            Label::View(entries) => entries
                .binary_search_by_key(&w, |e| e.0)
                .ok()
                .map(|i| &entries[i].1),
            Label::Atom(_) => None,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Atom(a) => write!(f, "{a}"),
            Label::View(entries) => {
                write!(f, "{{")?;
                for (i, (w, l)) in entries.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{w}:{l}")?;
                }
                write!(f, "}}")
            }
        }
    }
}

/// A finite alphabet.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Alphabet {
    /// Sorted, duplicate-free atom ids.
    Explicit(Vec<u32>),
    Boolean,
    /// `count` coordinates over `base`; a label is the atom whose mixed-radix
    /// digits (least significant first) are the coordinate indices.
    Product { base: Box<Alphabet>, count: usize },
    /// Opinions on every vertex of `ball` (sorted), the radius-`radius`
    /// ball around `center`, each drawn from the matching entry of `bases`.
    Ball {
        center: VarId,
        radius: usize,
        ball: Vec<VarId>,
        bases: Vec<Alphabet>,
    },
}

impl Alphabet {
    pub fn range(k: u32) -> Alphabet {
        if k == 2 {
            Alphabet::Boolean
        } else {
            Alphabet::Explicit((0..k).collect())
        }
    }

    pub fn explicit(mut labels: Vec<u32>) -> Result<Alphabet> {
        labels.sort_unstable();
        let before = labels.len();
        labels.dedup();
        if labels.is_empty() {
            return Err(Error::Invalid("explicit alphabet is empty".into()));
        }
        if labels.len() != before {
            return Err(Error::Invalid("explicit alphabet has duplicates".into()));
        }
        Ok(Alphabet::Explicit(labels))
    }

    /// Number of labels, saturating at `u128::MAX`.
    pub fn size(&self) -> u128 {
        match self {
            Alphabet::Explicit(v) => v.len() as u128,
            Alphabet::Boolean => 2,
            Alphabet::Product { base, count } => {
                let b = base.size();
                (0..*count).fold(1u128, |acc, _| acc.saturating_mul(b))
            }
            Alphabet::Ball { bases, .. } => bases
                .iter()
                .fold(1u128, |acc, b| acc.saturating_mul(b.size())),
        }
    }

    pub fn contains(&self, label: &Label) -> bool {
        self.index_of(label).is_some()
    }

    /// Dense index of `label`, or `None` if it is not a member.
    pub fn index_of(&self, label: &Label) -> Option<u128> {
        match (self, label) {
            (Alphabet::Explicit(v), Label::Atom(a)) => v.binary_search(a).ok().map(|i| i as u128),
            (Alphabet::Boolean, Label::Atom(a)) => (*a < 2).then_some(*a as u128),
            (Alphabet::Product { .. }, Label::Atom(a)) => {
                ((*a as u128) < self.size()).then_some(*a as u128)
            }
            (Alphabet::Ball { ball, bases, .. }, Label::View(entries)) => {
                if entries.len() != ball.len() {
                    return None;
                }
                let mut idx = 0u128;
                let mut radix = 1u128;
                for ((w, l), (bw, base)) in entries.iter().zip(ball.iter().zip(bases)) {
                    if w != bw {
                        return None;
                    }
                    let d = base.index_of(l)?;
                    idx = idx.checked_add(d.checked_mul(radix)?)?;
                    radix = radix.saturating_mul(base.size());
                }
                Some(idx)
            }
            _ => None,
        }
    }

    /// Inverse of [`Alphabet::index_of`].
    pub fn label_at(&self, idx: u128) -> Option<Label> {
        if idx >= self.size() {
            return None;
        }
        match self {
            Alphabet::Explicit(v) => Some(Label::Atom(v[idx as usize])),
            Alphabet::Boolean => Some(Label::Atom(idx as u32)),
            Alphabet::Product { .. } => Some(Label::Atom(idx as u32)),
            Alphabet::Ball { ball, bases, .. } => {
                let mut rest = idx;
                let mut entries = Vec::with_capacity(ball.len());
                for (w, base) in ball.iter().zip(bases) {
                    let s = base.size();
                    entries.push((*w, base.label_at(rest % s)?));
                    rest /= s;
                }
                Some(Label::View(entries.into()))
            }
        }
    }

    pub fn first_label(&self) -> Label {
        self.label_at(0).expect("alphabets are non-empty")
    }

    pub fn random_label(&self, rng: &mut Rng) -> Label {
        match self {
            Alphabet::Ball { ball, bases, .. } => Label::View(
                ball.iter()
                    .zip(bases)
                    .map(|(w, b)| (*w, b.random_label(rng)))
                    .collect::<Vec<_>>()
                    .into(),
            ),
            _ => {
                let s = self.size();
                self.label_at(rng.gen_range(0..s)).expect("index in range")
            }
        }
    }

    /// All labels in index order; errors when the alphabet exceeds `cap`.
    pub fn labels(&self, cap: u128) -> Result<Vec<Label>> {
        let s = self.size();
        if s > cap {
            return Err(Error::TooLarge(format!(
                "alphabet of size {s} exceeds enumeration cap {cap}"
            )));
        }
        Ok((0..s).map(|i| self.label_at(i).expect("in range")).collect())
    }
}
