//! Interactive single-node sessions. A session holds one executor share, and
//! user images run inside it without touching the allocator.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alloc::{place, PartitionState, Placement, PlacementRequest, Role, Target};
use crate::control::{AppState, ControlError, Outcome, System, SystemEvent};
use crate::error::Result;
use crate::manifest::ExecutionModel;
use crate::resources::ResourceVector;
use crate::sim::SimTime;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SessionError {
    #[error("session {0} is stopped")]
    Stopped(String),
    #[error("invalid child: {0}")]
    InvalidChild(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SessionState {
    Active,
    Stopped,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunExit {
    Ok,
    /// The child did not fit in what was left of the executor share.
    Rejected,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_id: String,
    pub image: String,
    pub work_hs06_s: f64,
    pub share: ResourceVector,
    pub start: SimTime,
    pub end: SimTime,
    pub exit: RunExit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub session_id: String,
    pub app_id: String,
    pub tenant: String,
    pub partition_id: String,
    pub executor: Placement,
    pub speed_per_core: f64,
    pub children: Vec<RunRecord>,
    pub state: SessionState,
}

impl Session {
    /// Sum of the shares of children still running at `now`.
    pub fn in_use(&self, now: SimTime) -> ResourceVector {
        self.children
            .iter()
            .filter(|c| c.exit == RunExit::Ok && c.start <= now && c.end > now)
            .map(|c| c.share)
            .sum()
    }

    pub fn admits(&self, share: &ResourceVector, now: SimTime) -> bool {
        (self.in_use(now) + *share).fits_in(&self.executor.share)
    }

    /// Seconds a child of `work` HS06·s runs on `millicores` of this session.
    pub fn child_duration(&self, work_hs06_s: f64, millicores: u64) -> f64 {
        if work_hs06_s == 0.0 {
            return 0.0;
        }
        work_hs06_s / (self.speed_per_core * millicores as f64 / 1000.0)
    }
}

impl System {
    fn session(&self, session_id: &str) -> Result<&Session> {
        self.state()
            .sessions
            .get(session_id)
            .ok_or_else(|| ControlError::UnknownSession(session_id.to_string()).into())
    }

    fn active_session(&self, session_id: &str) -> Result<&Session> {
        let session = self.session(session_id)?;
        if session.state == SessionState::Stopped {
            return Err(SessionError::Stopped(session_id.to_string()).into());
        }
        Ok(session)
    }

    pub(crate) fn start_session(&mut self, app_id: &str) -> Result<Outcome> {
        let record = self.app_record(app_id)?;
        let (share, class) = match &record.app.model {
            ExecutionModel::Session { share, node_class } => (*share, *node_class),
            other => {
                return Err(ControlError::WrongModel {
                    app_id: app_id.to_string(),
                    expected: "session",
                    actual: other.type_name(),
                }
                .into())
            }
        };
        if record.state == AppState::Released {
            return Err(ControlError::AppReleased(app_id.to_string()).into());
        }
        let tenant = record.app.tenant.clone();
        let request = PlacementRequest::fractional(Role::SessionExec, share, Target::Class(class));
        let offers = self.offers()?;
        let placements = place(
            app_id,
            &[request],
            &offers,
            &self.state().inventory,
            self.state().next_container,
        )?;
        let partition_id = self.open_partition(app_id)?;
        self.add_placements(&partition_id, &placements)?;
        self.emit(SystemEvent::PartitionState {
            partition_id: partition_id.clone(),
            state: PartitionState::Running,
        })?;
        let session_id = format!("s{:04}", self.state().next_session);
        self.emit(SystemEvent::SessionStarted {
            session_id: session_id.clone(),
            app_id: app_id.to_string(),
            tenant,
            partition_id,
            executor: placements[0].container_id.clone(),
        })?;
        self.set_app_state(app_id, AppState::Running)?;
        Ok(Outcome::Session(self.session(&session_id)?.clone()))
    }

    pub(crate) fn exec_image(
        &mut self,
        session_id: &str,
        image: &str,
        work_hs06_s: f64,
        share: ResourceVector,
    ) -> Result<Outcome> {
        let session = self.active_session(session_id)?;
        if !(work_hs06_s.is_finite() && work_hs06_s >= 0.0) {
            return Err(SessionError::InvalidChild(format!(
                "work must be a non-negative number, got {work_hs06_s}"
            ))
            .into());
        }
        if work_hs06_s > 0.0 && share.millicores == 0 {
            return Err(
                SessionError::InvalidChild("a child with work needs millicores".into()).into(),
            );
        }
        let now = self.now();
        let (exit, end) = if session.admits(&share, now) {
            let secs = session.child_duration(work_hs06_s, share.millicores);
            (RunExit::Ok, now + SimTime::from_secs_f64(secs))
        } else {
            (RunExit::Rejected, now)
        };
        let record = RunRecord {
            run_id: format!("{session_id}-r{:04}", session.children.len()),
            image: image.to_string(),
            work_hs06_s,
            share,
            start: now,
            end,
            exit,
        };
        self.emit(SystemEvent::SessionRun {
            session_id: session_id.to_string(),
            record: record.clone(),
        })?;
        Ok(Outcome::Run(record))
    }

    pub(crate) fn stop_session(&mut self, session_id: &str) -> Result<Outcome> {
        let session = self.active_session(session_id)?;
        let (app_id, partition_id) = (session.app_id.clone(), session.partition_id.clone());
        self.emit(SystemEvent::SessionStopped {
            session_id: session_id.to_string(),
        })?;
        self.emit(SystemEvent::PartitionReleased { partition_id })?;
        let others_active = self
            .state()
            .sessions
            .values()
            .any(|s| s.app_id == app_id && s.state == SessionState::Active);
        if !others_active && self.app_record(&app_id)?.state == AppState::Running {
            self.set_app_state(&app_id, AppState::Done)?;
        }
        Ok(Outcome::Session(self.session(session_id)?.clone()))
    }

    pub fn session_view(&self, session_id: &str) -> Result<Session> {
        self.session(session_id).cloned()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::Command;
    use crate::error::Error;
    use crate::fixtures;

    fn session_app(sys: &mut System, share: ResourceVector, class: &str) -> String {
        let text = format!(
            r#"{{"name":"nb","tenant":"stats","image":"r","model":{{"type":"session","node_class":"{class}","share":{{"millicores":{},"memory_mib":{},"gpus":{}}}}}}}"#,
            share.millicores, share.memory_mib, share.gpus
        );
        sys.submit_manifest(&text).unwrap()
    }

    fn system() -> System {
        let mut sys = System::new(42);
        sys.execute(Command::RegisterTenant {
            name: "stats".into(),
            ssh_pubkey: "ssh-ed25519 AAAA".into(),
        })
        .unwrap();
        sys
    }

    fn start(sys: &mut System, app_id: &str) -> Session {
        let Outcome::Session(s) = sys
            .execute(Command::StartSession {
                app_id: app_id.into(),
            })
            .unwrap()
        else {
            panic!()
        };
        s
    }

    fn exec(sys: &mut System, sid: &str, work: f64, share: ResourceVector) -> RunRecord {
        let Outcome::Run(r) = sys
            .execute(Command::ExecImage {
                session_id: sid.into(),
                image: "img".into(),
                work_hs06_s: work,
                share,
            })
            .unwrap()
        else {
            panic!()
        };
        r
    }

    #[test]
    fn lands_on_first_light_node() {
        let mut sys = system();
        let app = session_app(&mut sys, ResourceVector::new(8000, 16384, 0), "light");
        let s = start(&mut sys, &app);
        assert_eq!(s.executor.node_id, "L01");
        assert_eq!(s.state, SessionState::Active);
    }

    #[test]
    fn oversized_share_has_nowhere_to_go() {
        let mut sys = system();
        let app = session_app(&mut sys, ResourceVector::new(96000, 786432, 0), "fat");
        for _ in 0..4 {
            start(&mut sys, &app);
        }
        let err = sys
            .execute(Command::StartSession { app_id: app })
            .unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn two_sessions_share_a_node() {
        let mut sys = system();
        let app = session_app(&mut sys, ResourceVector::new(8000, 16384, 0), "light");
        let a = start(&mut sys, &app);
        let b = start(&mut sys, &app);
        assert_ne!(a.session_id, b.session_id);
        assert_eq!(a.executor.node_id, b.executor.node_id);
    }

    #[test]
    fn sandbox_bounds_children() {
        let mut sys = system();
        let app = session_app(&mut sys, ResourceVector::new(8000, 16384, 0), "light");
        let sid = start(&mut sys, &app).session_id;
        assert_eq!(
            exec(&mut sys, &sid, 0.0, ResourceVector::new(4000, 4096, 0)).exit,
            RunExit::Ok
        );
        assert_eq!(
            exec(&mut sys, &sid, 1.0, ResourceVector::new(9000, 1, 0)).exit,
            RunExit::Rejected
        );

        let first = exec(&mut sys, &sid, 1000.0, ResourceVector::new(5000, 1024, 0));
        assert_eq!(first.exit, RunExit::Ok);
        let second = exec(&mut sys, &sid, 1000.0, ResourceVector::new(5000, 1024, 0));
        assert_eq!(second.exit, RunExit::Rejected);
        assert_eq!(second.start, second.end);
        let wait = (first.end - first.start).as_secs_f64();
        sys.execute(Command::Advance { seconds: wait }).unwrap();
        assert_eq!(
            exec(&mut sys, &sid, 1000.0, ResourceVector::new(5000, 1024, 0)).exit,
            RunExit::Ok
        );
    }

    #[test]
    fn stop_truncates_and_frees() {
        let mut sys = system();
        let app = session_app(&mut sys, ResourceVector::new(8000, 16384, 0), "light");
        let sid = start(&mut sys, &app).session_id;
        exec(&mut sys, &sid, 1e6, ResourceVector::new(1000, 1024, 0));
        sys.execute(Command::Advance { seconds: 5.0 }).unwrap();
        let Outcome::Session(s) = sys
            .execute(Command::StopSession {
                session_id: sid.clone(),
            })
            .unwrap()
        else {
            panic!()
        };
        assert_eq!(s.state, SessionState::Stopped);
        assert_eq!(s.children[0].end, SimTime::from_micros(5_000_000));
        assert!(sys.state().live_placements().is_empty());
        let err = sys
            .execute(Command::StopSession {
                session_id: sid.clone(),
            })
            .unwrap_err();
        assert!(matches!(err, Error::Session(SessionError::Stopped(_))));
        let err = sys
            .execute(Command::ExecImage {
                session_id: sid,
                image: "img".into(),
                work_hs06_s: 0.0,
                share: ResourceVector::new(1, 1, 0),
            })
            .unwrap_err();
        assert!(matches!(err, Error::Session(SessionError::Stopped(_))));
    }

    #[test]
    fn no2_fixture_runs_on_fat() {
        let mut sys = system();
        let app = sys.submit_manifest(fixtures::NO2).unwrap();
        let s = start(&mut sys, &app);
        assert_eq!(s.executor.node_id, "F01");
        let before = sys.state().usage.clone();
        exec(
            &mut sys,
            &s.session_id,
            100.0,
            ResourceVector::new(1000, 1024, 0),
        );
        assert_eq!(sys.state().usage, before);
    }
}
