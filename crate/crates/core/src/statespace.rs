//! State enumeration and the index layout shared by every other module.
//!
//! For `m` SF/VM pairs and `n` hosts there are `5 + 3m + 4n` states:
//!
//! | index              | state                         |
//! |--------------------|-------------------------------|
//! | 0                  | perfect                       |
//! | 1                  | failed                        |
//! | 2                  | restart of all SFs            |
//! | 3                  | restart of all SFs and VMs    |
//! | 4                  | reboot of all VMMs            |
//! | 4 + i              | SF `i` unstable               |
//! | 4 + m + i          | VM `i` unstable               |
//! | 4 + 2m + j         | VMM `j` unstable              |
//! | 4 + 2m + n + i     | restart of VM `i` and its SF  |
//! | 4 + 3m + n + j     | restart of SFs on host `j`    |
//! | 4 + 3m + 2n + j    | restart of SFs+VMs on host `j`|
//! | 4 + 3m + 3n + j    | reboot of host `j`            |
//!
//! with one-based `i`, `j` in the table. The API takes zero-based indices.

use crate::error::{Error, Result};
use crate::topology::Topology;

/// Status of one component within a system state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Perfect,
    Unstable,
    Recovery,
    Failed,
}

impl Status {
    pub fn letter(self) -> char {
        match self {
            Status::Perfect => 'P',
            Status::Unstable => 'U',
            Status::Recovery => 'R',
            Status::Failed => 'F',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StateKind {
    Perfect,
    Failed,
    SfSystemRestart,
    VmSystemRestart,
    VmmSystemReboot,
    SfUnstable(usize),
    VmUnstable(usize),
    VmmUnstable(usize),
    VmPortionRestart(usize),
    SfHostRestart(usize),
    VmHostRestart(usize),
    VmmHostReboot(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AvailabilityClass {
    Up,
    Down,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SystemState {
    pub index: usize,
    pub kind: StateKind,
    /// Statuses of SF 1..m, VM 1..m, VMM 1..n in that order.
    pub status: Vec<Status>,
    pub class: AvailabilityClass,
}

impl SystemState {
    pub fn is_up(&self) -> bool {
        self.class == AvailabilityClass::Up
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateSpace {
    states: Vec<SystemState>,
    m: usize,
    n: usize,
}

impl StateKind {
    pub fn class(self) -> AvailabilityClass {
        match self {
            StateKind::Perfect
            | StateKind::SfUnstable(_)
            | StateKind::VmUnstable(_)
            | StateKind::VmmUnstable(_) => AvailabilityClass::Up,
            _ => AvailabilityClass::Down,
        }
    }

    /// Short report label, e.g. `VMM1_UNSTABLE`.
    pub fn label(self) -> String {
        match self {
            StateKind::Perfect => "PERFECT".into(),
            StateKind::Failed => "FAILED".into(),
            StateKind::SfSystemRestart => "SF_SYSTEM_RESTART".into(),
            StateKind::VmSystemRestart => "VM_SYSTEM_RESTART".into(),
            StateKind::VmmSystemReboot => "VMM_SYSTEM_REBOOT".into(),
            StateKind::SfUnstable(i) => format!("SF{}_UNSTABLE", i + 1),
            StateKind::VmUnstable(i) => format!("VM{}_UNSTABLE", i + 1),
            StateKind::VmmUnstable(j) => format!("VMM{}_UNSTABLE", j + 1),
            StateKind::VmPortionRestart(i) => format!("VM{}_PORTION_RESTART", i + 1),
            StateKind::SfHostRestart(j) => format!("HOST{}_SF_RESTART", j + 1),
            StateKind::VmHostRestart(j) => format!("HOST{}_VM_RESTART", j + 1),
            StateKind::VmmHostReboot(j) => format!("HOST{}_REBOOT", j + 1),
        }
    }
}

impl StateSpace {
    pub fn build(topo: &Topology) -> Self {
        let m = topo.num_sfs();
        let n = topo.num_hosts();
        let mut kinds = vec![
            StateKind::Perfect,
            StateKind::Failed,
            StateKind::SfSystemRestart,
            StateKind::VmSystemRestart,
            StateKind::VmmSystemReboot,
        ];
        kinds.extend((0..m).map(StateKind::SfUnstable));
        kinds.extend((0..m).map(StateKind::VmUnstable));
        kinds.extend((0..n).map(StateKind::VmmUnstable));
        kinds.extend((0..m).map(StateKind::VmPortionRestart));
        kinds.extend((0..n).map(StateKind::SfHostRestart));
        kinds.extend((0..n).map(StateKind::VmHostRestart));
        kinds.extend((0..n).map(StateKind::VmmHostReboot));

        let states = kinds
            .into_iter()
            .enumerate()
            .map(|(index, kind)| SystemState {
                index,
                kind,
                status: status_vector(topo, kind),
                class: kind.class(),
            })
            .collect();
        StateSpace { states, m, n }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn num_sfs(&self) -> usize {
        self.m
    }

    pub fn num_hosts(&self) -> usize {
        self.n
    }

    pub fn states(&self) -> &[SystemState] {
        &self.states
    }

    pub fn state(&self, index: usize) -> &SystemState {
        &self.states[index]
    }

    /// Index of a state kind; fails if a component index is out of range.
    pub fn index_of(&self, kind: StateKind) -> Result<usize> {
        let (m, n) = (self.m, self.n);
        let check = |i: usize, bound: usize| {
            if i < bound {
                Ok(i)
            } else {
                Err(Error::Domain(format!("{kind:?} out of range")))
            }
        };
        Ok(match kind {
            StateKind::Perfect => 0,
            StateKind::Failed => 1,
            StateKind::SfSystemRestart => 2,
            StateKind::VmSystemRestart => 3,
            StateKind::VmmSystemReboot => 4,
            StateKind::SfUnstable(i) => 5 + check(i, m)?,
            StateKind::VmUnstable(i) => 5 + m + check(i, m)?,
            StateKind::VmmUnstable(j) => 5 + 2 * m + check(j, n)?,
            StateKind::VmPortionRestart(i) => 5 + 2 * m + n + check(i, m)?,
            StateKind::SfHostRestart(j) => 5 + 3 * m + n + check(j, n)?,
            StateKind::VmHostRestart(j) => 5 + 3 * m + 2 * n + check(j, n)?,
            StateKind::VmmHostReboot(j) => 5 + 3 * m + 3 * n + check(j, n)?,
        })
    }

    /// Perfect plus every unstable state, in index order.
    pub fn up_state_indices(&self) -> Vec<usize> {
        self.states
            .iter()
            .filter(|s| s.is_up())
            .map(|s| s.index)
            .collect()
    }

    /// `S13=VMM1_UNSTABLE` style label.
    pub fn label(&self, index: usize) -> String {
        format!("S{index}={}", self.states[index].kind.label())
    }

    /// Status letters, e.g. `PPPP|PPPP|UP`.
    pub fn status_string(&self, index: usize) -> String {
        let s = &self.states[index].status;
        let part = |r: std::ops::Range<usize>| s[r].iter().map(|x| x.letter()).collect::<String>();
        format!(
            "{}|{}|{}",
            part(0..self.m),
            part(self.m..2 * self.m),
            part(2 * self.m..2 * self.m + self.n)
        )
    }
}

fn status_vector(topo: &Topology, kind: StateKind) -> Vec<Status> {
    let m = topo.num_sfs();
    let n = topo.num_hosts();
    let sf = |i: usize| i;
    let vm = |i: usize| m + i;
    let vmm = |j: usize| 2 * m + j;
    let mut s = vec![Status::Perfect; 2 * m + n];
    match kind {
        StateKind::Perfect => {}
        StateKind::Failed => s.fill(Status::Failed),
        StateKind::SfSystemRestart => s[..m].fill(Status::Recovery),
        StateKind::VmSystemRestart => s[..2 * m].fill(Status::Recovery),
        StateKind::VmmSystemReboot => s.fill(Status::Recovery),
        StateKind::SfUnstable(i) => s[sf(i)] = Status::Unstable,
        StateKind::VmUnstable(i) => s[vm(i)] = Status::Unstable,
        StateKind::VmmUnstable(j) => s[vmm(j)] = Status::Unstable,
        StateKind::VmPortionRestart(i) => {
            s[sf(i)] = Status::Recovery;
            s[vm(i)] = Status::Recovery;
        }
        StateKind::SfHostRestart(j) => {
            for i in topo.host_components(j) {
                s[sf(i)] = Status::Recovery;
            }
        }
        StateKind::VmHostRestart(j) => {
            for i in topo.host_components(j) {
                s[sf(i)] = Status::Recovery;
                s[vm(i)] = Status::Recovery;
            }
        }
        StateKind::VmmHostReboot(j) => {
            for i in topo.host_components(j) {
                s[sf(i)] = Status::Recovery;
                s[vm(i)] = Status::Recovery;
            }
            s[vmm(j)] = Status::Recovery;
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts() {
        let ss = StateSpace::build(&Topology::balanced(4, 2).unwrap());
        assert_eq!(ss.len(), 25);
        assert_eq!(ss.up_state_indices().len(), 11);
        assert_eq!(ss.len() - ss.up_state_indices().len(), 4 + 4 + 3 * 2);
        let one = StateSpace::build(&Topology::balanced(1, 1).unwrap());
        assert_eq!(one.len(), 12);
        assert_eq!(one.up_state_indices(), vec![0, 5, 6, 7]);
    }

    #[test]
    fn vmm_unstable_index() {
        let ss = StateSpace::build(&Topology::balanced(4, 2).unwrap());
        // one-based 4 + 2m + 1 = 13
        let s = ss.state(13);
        assert_eq!(s.kind, StateKind::VmmUnstable(0));
        assert_eq!(ss.status_string(13), "PPPP|PPPP|UP");
        assert_eq!(ss.label(13), "S13=VMM1_UNSTABLE");
    }

    #[test]
    fn index_lookup_is_bijective() {
        let ss = StateSpace::build(&Topology::new(vec![0, 1, 1], 2).unwrap());
        for s in ss.states() {
            assert_eq!(ss.index_of(s.kind).unwrap(), s.index);
        }
        assert!(ss.index_of(StateKind::VmmUnstable(2)).is_err());
    }

    #[test]
    fn status_vectors() {
        let topo = Topology::balanced(4, 2).unwrap();
        let ss = StateSpace::build(&topo);
        let idx = |k| ss.index_of(k).unwrap();
        assert_eq!(ss.status_string(0), "PPPP|PPPP|PP");
        assert_eq!(ss.status_string(1), "FFFF|FFFF|FF");
        assert_eq!(ss.status_string(3), "RRRR|RRRR|PP");
        assert_eq!(ss.status_string(4), "RRRR|RRRR|RR");
        assert_eq!(ss.status_string(idx(StateKind::SfHostRestart(1))), "PPRR|PPPP|PP");
        assert_eq!(ss.status_string(idx(StateKind::VmHostRestart(0))), "RRPP|RRPP|PP");
        assert_eq!(ss.status_string(idx(StateKind::VmmHostReboot(1))), "PPRR|PPRR|PR");
        assert_eq!(ss.status_string(idx(StateKind::VmPortionRestart(2))), "PPRP|PPRP|PP");
        for s in ss.states() {
            assert_eq!(s.is_up(), !s.status.iter().any(|x| matches!(x, Status::Recovery | Status::Failed)));
        }
    }
}
