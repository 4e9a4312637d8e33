//! Names of the canonical classes and the inclusion arrows between them.

use alloc::collections::BTreeSet;
use alloc::string::ToString;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Class {
    SF,
    LS,
    LSE,
    PR,
    E,
    HC,
    Y,
    SFf,
    LSf,
    LSEf,
    PRf,
    Ef,
    HCf,
    HCfLambda,
    Yf,
    SFx,
    LSx,
    LSEx,
    PRx,
    Ex,
    HCx,
    Yx,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Row {
    Classical,
    Potential,
    Vector,
}

use Class::*;

impl Class {
    pub const ALL: [Class; 22] = [
        SF, LS, LSE, PR, E, HC, Y, SFf, LSf, LSEf, PRf, Ef, HCf, HCfLambda, Yf, SFx, LSx, LSEx,
        PRx, Ex, HCx, Yx,
    ];
    pub const CLASSICAL: [Class; 7] = [SF, LS, LSE, PR, E, HC, Y];
    pub const POTENTIAL: [Class; 8] = [SFf, LSf, LSEf, PRf, Ef, HCf, HCfLambda, Yf];
    pub const VECTOR: [Class; 7] = [SFx, LSx, LSEx, PRx, Ex, HCx, Yx];

    pub fn name(self) -> &'static str {
        match self {
            SF => "SF",
            LS => "LS",
            LSE => "LSE",
            PR => "PR",
            E => "E",
            HC => "HC",
            Y => "Y",
            SFf => "SFf",
            LSf => "LSf",
            LSEf => "LSEf",
            PRf => "PRf",
            Ef => "Ef",
            HCf => "HCf",
            HCfLambda => "HCfLambda",
            Yf => "Yf",
            SFx => "SFx",
            LSx => "LSx",
            LSEx => "LSEx",
            PRx => "PRx",
            Ex => "Ex",
            HCx => "HCx",
            Yx => "Yx",
        }
    }

    pub fn row(self) -> Row {
        match self {
            SF | LS | LSE | PR | E | HC | Y => Row::Classical,
            SFf | LSf | LSEf | PRf | Ef | HCf | HCfLambda | Yf => Row::Potential,
            _ => Row::Vector,
        }
    }

    /// Whether the class carries a constant λ to be estimated.
    pub fn has_lambda(self) -> bool {
        matches!(
            self,
            SF | LSE | E | SFf | LSEf | Ef | HCfLambda | SFx | LSEx | Ex
        )
    }

    /// Covariant-derivative depth of the deepest quantity the test reads.
    pub fn depth(self) -> usize {
        match self {
            SF | E | SFf | Ef | SFx | Ex => 0,
            _ => 1,
        }
    }

    /// The same class in another row, where one exists.
    pub fn in_row(self, row: Row) -> Option<Class> {
        let idx = match self {
            SF | SFf | SFx => 0,
            LS | LSf | LSx => 1,
            LSE | LSEf | LSEx => 2,
            PR | PRf | PRx => 3,
            E | Ef | Ex => 4,
            HC | HCf | HCx => 5,
            Y | Yf | Yx => 6,
            HCfLambda => return (row == Row::Potential).then_some(HCfLambda),
        };
        Some(match row {
            Row::Classical => Class::CLASSICAL[idx],
            Row::Potential => [SFf, LSf, LSEf, PRf, Ef, HCf, Yf][idx],
            Row::Vector => Class::VECTOR[idx],
        })
    }
}

impl fmt::Display for Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Class {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Class::ALL
            .iter()
            .copied()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::UnknownClass(s.to_string()))
    }
}

/// Inclusion arrows `(sub, super)` inside each row of the lattice.
pub fn inclusions() -> Vec<(Class, Class)> {
    let mut out = Vec::new();
    for row in [Row::Classical, Row::Potential, Row::Vector] {
        let c = |k: Class| k.in_row(row).expect("every base class exists in every row");
        for (a, b) in [
            (SF, LSE),
            (LSE, E),
            (E, HC),
            (HC, Y),
            (SF, LS),
            (LSE, LS),
            (LS, PR),
            (E, PR),
            (PR, HC),
        ] {
            out.push((c(a), c(b)));
        }
    }
    out.extend([(Ef, HCfLambda), (PRf, HCfLambda), (HCfLambda, HCf)]);
    out
}

/// Vertical arrows that hold for a given structure: classical ⇔ potential when
/// the potential is trivial, potential ⊂ vector when the field is its gradient.
pub fn vertical_inclusions(trivial_potential: bool, gradient_field: bool) -> Vec<(Class, Class)> {
    let mut out = Vec::new();
    for base in Class::CLASSICAL {
        let f = base.in_row(Row::Potential).expect("row");
        let x = base.in_row(Row::Vector).expect("row");
        if trivial_potential {
            out.push((base, f));
            out.push((f, base));
        }
        if gradient_field {
            out.push((f, x));
            out.push((x, f));
        }
    }
    out
}

/// Arrows violated by `members`: the sub-class is present, the super-class is not.
pub fn violations(members: &BTreeSet<Class>, arrows: &[(Class, Class)]) -> Vec<(Class, Class)> {
    arrows
        .iter()
        .copied()
        .filter(|(a, b)| members.contains(a) && !members.contains(b))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for c in Class::ALL {
            assert_eq!(c.name().parse::<Class>().unwrap(), c);
        }
        assert!("Zf".parse::<Class>().is_err());
    }

    #[test]
    fn full_set_is_closed() {
        let all: BTreeSet<Class> = Class::ALL.into_iter().collect();
        assert!(violations(&all, &inclusions()).is_empty());
        let only_e: BTreeSet<Class> = [Ef].into_iter().collect();
        let v = violations(&only_e, &inclusions());
        assert!(v.contains(&(Ef, HCf)) && v.contains(&(Ef, PRf)) && v.contains(&(Ef, HCfLambda)));
    }
}
