//! Per-user activity profiles: library `I_k`, vocabulary `T_k` and the
//! number of assignments performed.

use crate::trace::{ItemId, TagAssignment, TagId, Timestamp, Trace, UserId};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UserProfile {
    pub user: UserId,
    /// Sorted, distinct.
    pub items: Vec<ItemId>,
    /// Sorted, distinct.
    pub tags: Vec<TagId>,
    pub assignments: u64,
    pub first_seen: Timestamp,
    pub last_seen: Timestamp,
}

impl UserProfile {
    fn new(user: UserId, at: Timestamp) -> Self {
        UserProfile { user, items: Vec::new(), tags: Vec::new(), assignments: 0, first_seen: at, last_seen: at }
    }
}

/// Profiles indexed by user id. Users without activity in the source
/// assignments have no profile.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Profiles {
    by_user: Vec<Option<UserProfile>>,
    present: usize,
}

impl Profiles {
    /// One profile per user of `trace`.
    pub fn build(trace: &Trace) -> Profiles {
        Profiles::from_assignments(trace.assignments(), trace.num_users())
    }

    /// Profiles over a subset of a trace's assignments, keeping the parent
    /// trace's id space of `universe` users.
    pub fn from_assignments(assignments: &[TagAssignment], universe: usize) -> Profiles {
        let mut by_user: Vec<Option<UserProfile>> = vec![None; universe];
        for a in assignments {
            let p = by_user[a.user.index()].get_or_insert_with(|| UserProfile::new(a.user, a.timestamp));
            p.items.push(a.item);
            p.tags.push(a.tag);
            p.assignments += 1;
            p.first_seen = p.first_seen.min(a.timestamp);
            p.last_seen = p.last_seen.max(a.timestamp);
        }
        let mut present = 0;
        for p in by_user.iter_mut().flatten() {
            p.items.sort_unstable();
            p.items.dedup();
            p.items.shrink_to_fit();
            p.tags.sort_unstable();
            p.tags.dedup();
            p.tags.shrink_to_fit();
            present += 1;
        }
        Profiles { by_user, present }
    }

    pub fn get(&self, user: UserId) -> Option<&UserProfile> {
        self.by_user.get(user.index()).and_then(Option::as_ref)
    }

    /// Profiles in user-id order.
    pub fn iter(&self) -> impl Iterator<Item = &UserProfile> + '_ {
        self.by_user.iter().flatten()
    }

    /// Number of users with a profile.
    pub fn len(&self) -> usize {
        self.present
    }

    pub fn is_empty(&self) -> bool {
        self.present == 0
    }

    /// Size of the user id space.
    pub fn universe(&self) -> usize {
        self.by_user.len()
    }
}
