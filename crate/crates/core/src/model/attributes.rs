use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Oldest representable age, in single years.
pub const MAX_AGE: u16 = 115;
/// Persons at or above this age count toward the voting-age population.
pub const VOTING_AGE: u16 = 18;

macro_rules! category {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $label:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn label(self) -> &'static str {
                match self {
                    $($name::$variant => $label),+
                }
            }

            pub fn code(self) -> u16 {
                self as u16
            }

            pub fn from_code(code: u16) -> Option<Self> {
                Self::ALL.get(usize::from(code)).copied()
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.label())
            }
        }

        impl FromStr for $name {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                Self::ALL
                    .iter()
                    .copied()
                    .find(|v| v.label() == s)
                    .ok_or_else(|| Error::Schema(format!(
                        "unknown {} value {s:?}", stringify!($name).to_lowercase()
                    )))
            }
        }
    };
}

category!(Gender {
    Male => "Male",
    Female => "Female",
});

category!(
    /// Race categories. The domain is configuration; six categories give
    /// twelve race/ethnicity combinations.
    Race {
        White => "White",
        Black => "Black",
        AmericanIndian => "American_Indian",
        Asian => "Asian",
        PacificIslander => "Pacific_Islander",
        Other => "Other",
    }
);

category!(Ethnicity {
    Hispanic => "Hispanic",
    NotHispanic => "Not_Hispanic",
});

category!(
    /// Relationship to the householder (17 categories).
    Relationship {
        Householder => "Householder",
        Spouse => "Spouse",
        UnmarriedPartner => "Unmarried_Partner",
        BiologicalChild => "Biological_Child",
        AdoptedChild => "Adopted_Child",
        Stepchild => "Stepchild",
        Sibling => "Sibling",
        Parent => "Parent",
        Grandchild => "Grandchild",
        ParentInLaw => "Parent_In_Law",
        ChildInLaw => "Child_In_Law",
        OtherRelative => "Other_Relative",
        RoomerBoarder => "Roomer_Boarder",
        Housemate => "Housemate",
        FosterChild => "Foster_Child",
        OtherNonrelative => "Other_Nonrelative",
        GroupQuarters => "Group_Quarters",
    }
);

/// A tabulable person attribute. Values are carried as small integer codes
/// (`age` in years, categories by declaration order).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Attribute {
    Age,
    Gender,
    Race,
    Ethnicity,
    Relationship,
}

impl Attribute {
    pub const ALL: [Attribute; 5] = [
        Attribute::Age,
        Attribute::Gender,
        Attribute::Race,
        Attribute::Ethnicity,
        Attribute::Relationship,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Attribute::Age => "age",
            Attribute::Gender => "gender",
            Attribute::Race => "race",
            Attribute::Ethnicity => "ethnicity",
            Attribute::Relationship => "relationship",
        }
    }

    pub fn domain_size(self) -> u16 {
        match self {
            Attribute::Age => MAX_AGE + 1,
            Attribute::Gender => Gender::ALL.len() as u16,
            Attribute::Race => Race::ALL.len() as u16,
            Attribute::Ethnicity => Ethnicity::ALL.len() as u16,
            Attribute::Relationship => Relationship::ALL.len() as u16,
        }
    }

    pub fn label(self, code: u16) -> String {
        let known = match self {
            Attribute::Age => (code <= MAX_AGE).then(|| code.to_string()),
            Attribute::Gender => Gender::from_code(code).map(|v| v.label().to_owned()),
            Attribute::Race => Race::from_code(code).map(|v| v.label().to_owned()),
            Attribute::Ethnicity => Ethnicity::from_code(code).map(|v| v.label().to_owned()),
            Attribute::Relationship => Relationship::from_code(code).map(|v| v.label().to_owned()),
        };
        known.unwrap_or_else(|| format!("#{code}"))
    }

    pub fn parse_value(self, s: &str) -> Result<u16> {
        let s = s.trim();
        Ok(match self {
            Attribute::Age => {
                let age: u16 = s
                    .parse()
                    .map_err(|_| Error::Schema(format!("invalid age {s:?}")))?;
                if age > MAX_AGE {
                    return Err(Error::Schema(format!("age {age} exceeds {MAX_AGE}")));
                }
                age
            }
            Attribute::Gender => s.parse::<Gender>()?.code(),
            Attribute::Race => s.parse::<Race>()?.code(),
            Attribute::Ethnicity => s.parse::<Ethnicity>()?.code(),
            Attribute::Relationship => s.parse::<Relationship>()?.code(),
        })
    }

    /// Parses attribute names such as `["age", "gender"]`.
    pub fn parse_list<S: AsRef<str>>(names: &[S]) -> Result<Vec<Attribute>> {
        names.iter().map(|s| s.as_ref().parse()).collect()
    }
}

impl fmt::Display for Attribute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Attribute {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Attribute::ALL
            .into_iter()
            .find(|a| a.name() == s.trim())
            .ok_or_else(|| Error::Schema(format!("unknown attribute {s:?}")))
    }
}
