//! Household survey records and their closed attribute vocabularies.
//!
//! Values follow the expert archetype attribute table, with multi-valued
//! cells ("river/dam", "asbestos, blocks, brick") split into one token per
//! alternative.

use alloc::string::ToString;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::HouseholdId;
use crate::Error;

macro_rules! vocabulary {
    ($(#[$meta:meta])* $name:ident, $kind:literal, { $($variant:ident => $token:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        pub enum $name {
            $(#[serde(rename = $token)] $variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];
            pub const KIND: &'static str = $kind;

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $token),+
                }
            }

            pub fn index(self) -> usize {
                self as usize
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self, Error> {
                let s = s.trim();
                Self::ALL
                    .iter()
                    .copied()
                    .find(|v| v.as_str().eq_ignore_ascii_case(s))
                    .ok_or_else(|| Error::Vocabulary { kind: $kind, value: s.to_string() })
            }
        }
    };
}

vocabulary!(
    /// Household water access.
    Water, "water", {
        River => "river",
        Dam => "dam",
        StreetTaps => "street_taps",
        TapInYard => "tap_in_yard",
        TapInHouse => "tap_in_house",
    }
);

vocabulary!(
    WallMaterial, "wall material", {
        Daub => "daub",
        Mud => "mud",
        Clay => "clay",
        CorrugatedIron => "corrugated_iron",
        Zinc => "zinc",
        Asbestos => "asbestos",
        Blocks => "blocks",
        Brick => "brick",
    }
);

vocabulary!(
    /// Floor area band in square metres.
    FloorArea, "floor area", {
        Upto50 => "0-50",
        From50To80 => "50-80",
        From80To150 => "80-150",
        From150To250 => "150-250",
    }
);

vocabulary!(
    /// Monthly household income band in rand.
    Income, "income", {
        Upto1800 => "R0-R1.8k",
        From1800To3200 => "R1.8k-R3.2k",
        From3200To7800 => "R3.2k-R7.8k",
        From7800To11600 => "R7.8k-R11.6k",
        From19000To24500 => "R19k-R24.5k",
    }
);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurveyRecord {
    pub household: HouseholdId,
    pub water: Water,
    pub wall: WallMaterial,
    pub floor_area: FloorArea,
    pub income: Income,
}

/// Socio-demographic attributes without the household, as planted by the
/// synthetic generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SocioAttributes {
    pub water: Water,
    pub wall: WallMaterial,
    pub floor_area: FloorArea,
    pub income: Income,
}

impl SocioAttributes {
    pub fn for_household(self, household: HouseholdId) -> SurveyRecord {
        SurveyRecord {
            household,
            water: self.water,
            wall: self.wall,
            floor_area: self.floor_area,
            income: self.income,
        }
    }
}
