use std::fmt;
use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};

/// Allocatable resource quantities. One logical core is 1000 millicores.
///
/// Ordering is componentwise: `a.fits_in(&b)` holds iff every field of `a`
/// is at most the matching field of `b`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResourceVector {
    pub millicores: u64,
    pub memory_mib: u64,
    pub gpus: u64,
}

impl ResourceVector {
    pub const ZERO: ResourceVector = ResourceVector::new(0, 0, 0);

    pub const fn new(millicores: u64, memory_mib: u64, gpus: u64) -> Self {
        Self {
            millicores,
            memory_mib,
            gpus,
        }
    }

    pub fn is_zero(&self) -> bool {
        *self == Self::ZERO
    }

    pub fn fits_in(&self, other: &ResourceVector) -> bool {
        self.millicores <= other.millicores
            && self.memory_mib <= other.memory_mib
            && self.gpus <= other.gpus
    }

    /// Componentwise subtraction, `None` if any field would go negative.
    pub fn checked_sub(&self, other: &ResourceVector) -> Option<ResourceVector> {
        Some(ResourceVector {
            millicores: self.millicores.checked_sub(other.millicores)?,
            memory_mib: self.memory_mib.checked_sub(other.memory_mib)?,
            gpus: self.gpus.checked_sub(other.gpus)?,
        })
    }

    /// Best-fit ordering key: remaining millicores, then memory.
    pub(crate) fn fit_key(&self) -> (u64, u64) {
        (self.millicores, self.memory_mib)
    }
}

impl Add for ResourceVector {
    type Output = ResourceVector;

    fn add(self, rhs: ResourceVector) -> ResourceVector {
        ResourceVector {
            millicores: self.millicores + rhs.millicores,
            memory_mib: self.memory_mib + rhs.memory_mib,
            gpus: self.gpus + rhs.gpus,
        }
    }
}

impl AddAssign for ResourceVector {
    fn add_assign(&mut self, rhs: ResourceVector) {
        *self = *self + rhs;
    }
}

impl std::iter::Sum for ResourceVector {
    fn sum<I: Iterator<Item = ResourceVector>>(iter: I) -> Self {
        iter.fold(ResourceVector::ZERO, Add::add)
    }
}

impl fmt::Display for ResourceVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{{{}m, {} MiB, {} gpu}}",
            self.millicores, self.memory_mib, self.gpus
        )
    }
}
