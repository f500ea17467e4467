//! Box-derived observation features.
//!
//! Every per-frame quantity needs the sample at `t` and at `t - 1`. A person's
//! intrinsic motion at a frame is captured by [`Kinematics`]; pairwise and group
//! observations are pure functions of kinematics, which lets averaged entities
//! (seed and group representatives) reuse the same formulas as real people.

use std::f64::consts::PI;

use thiserror::Error;

use crate::trackio::{Frame, PersonId, TrackSet};

pub const PAIR_DIM: usize = 6;
pub const GROUP_DIM: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum FeatureError {
    #[error("no observation for person {person} at frame {frame}")]
    Unavailable { person: PersonId, frame: Frame },
    #[error("empty group")]
    EmptyGroup,
}

/// Intrinsic motion of one entity at one frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kinematics {
    pub x: f64,
    pub y: f64,
    /// Displacement since the previous frame.
    pub dx: f64,
    pub dy: f64,
    pub speed: f64,
    pub change_of_width: f64,
    pub change_of_height: f64,
}

impl Kinematics {
    /// Direction of motion; zero for an exactly zero displacement.
    pub fn heading(&self) -> f64 {
        if self.dx == 0.0 && self.dy == 0.0 {
            0.0
        } else {
            self.dy.atan2(self.dx)
        }
    }

    /// Feature-space average. Speed is the mean of member speeds, position the
    /// centroid and direction that of the mean displacement.
    pub fn mean<'a>(items: impl IntoIterator<Item = &'a Kinematics>) -> Option<Kinematics> {
        let mut acc = [0.0; 7];
        let mut n = 0usize;
        for k in items {
            for (a, v) in acc.iter_mut().zip([
                k.x,
                k.y,
                k.dx,
                k.dy,
                k.speed,
                k.change_of_width,
                k.change_of_height,
            ]) {
                *a += v;
            }
            n += 1;
        }
        if n == 0 {
            return None;
        }
        let m = acc.map(|a| a / n as f64);
        Some(Kinematics {
            x: m[0],
            y: m[1],
            dx: m[2],
            dy: m[3],
            speed: m[4],
            change_of_width: m[5],
            change_of_height: m[6],
        })
    }

    pub fn translated(&self, ox: f64, oy: f64) -> Kinematics {
        Kinematics {
            x: self.x + ox,
            y: self.y + oy,
            ..*self
        }
    }
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut r = a % (2.0 * PI);
    if r <= -PI {
        r += 2.0 * PI;
    } else if r > PI {
        r -= 2.0 * PI;
    }
    r
}

/// The six features describing person `i` when correlated with `j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairObservation {
    pub change_of_width: f64,
    pub change_of_height: f64,
    pub speed: f64,
    pub average_distance: f64,
    pub speed_difference: f64,
    pub motion_direction_angle: f64,
}

impl PairObservation {
    pub fn to_array(&self) -> [f64; PAIR_DIM] {
        [
            self.change_of_width,
            self.change_of_height,
            self.speed,
            self.average_distance,
            self.speed_difference,
            self.motion_direction_angle,
        ]
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.to_array().to_vec()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupObservation {
    pub avg_change_of_width: f64,
    pub avg_change_of_height: f64,
    pub avg_speed: f64,
    pub avg_distance: f64,
    pub speed_variance: f64,
}

impl GroupObservation {
    pub fn to_array(&self) -> [f64; GROUP_DIM] {
        [
            self.avg_change_of_width,
            self.avg_change_of_height,
            self.avg_speed,
            self.avg_distance,
            self.speed_variance,
        ]
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.to_array().to_vec()
    }
}

/// Relative change of box area between consecutive frames.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct BodySizeChange(pub f64);

pub fn kinematics(tracks: &TrackSet, person: PersonId, t: Frame) -> Result<Kinematics, FeatureError> {
    let missing = FeatureError::Unavailable { person, frame: t };
    if t == 0 {
        return Err(missing);
    }
    let cur = tracks.sample(t, person).ok_or(missing)?;
    let prev = tracks.sample(t - 1, person).ok_or(missing)?;
    let dx = cur.x - prev.x;
    let dy = cur.y - prev.y;
    Ok(Kinematics {
        x: cur.x,
        y: cur.y,
        dx,
        dy,
        speed: dx.hypot(dy),
        change_of_width: (cur.w - prev.w).abs() / cur.w,
        change_of_height: (cur.h - prev.h).abs() / cur.h,
    })
}

/// Pair features of entity `a` with respect to entity `b`.
pub fn pair_between(a: &Kinematics, b: &Kinematics) -> PairObservation {
    let mx = (a.x + b.x) / 2.0;
    let my = (a.y + b.y) / 2.0;
    PairObservation {
        change_of_width: a.change_of_width,
        change_of_height: a.change_of_height,
        speed: a.speed,
        average_distance: (a.x - mx).hypot(a.y - my),
        speed_difference: (a.speed - b.speed) / 2.0,
        motion_direction_angle: wrap_angle(a.heading() - b.heading()),
    }
}

pub fn pair_observation(
    tracks: &TrackSet,
    i: PersonId,
    j: PersonId,
    t: Frame,
) -> Result<PairObservation, FeatureError> {
    let a = kinematics(tracks, i, t)?;
    let b = kinematics(tracks, j, t)?;
    Ok(pair_between(&a, &b))
}

pub fn group_between(members: &[Kinematics]) -> Result<GroupObservation, FeatureError> {
    let n = members.len() as f64;
    let centroid = Kinematics::mean(members).ok_or(FeatureError::EmptyGroup)?;
    let avg_distance = members
        .iter()
        .map(|k| (k.x - centroid.x).hypot(k.y - centroid.y))
        .sum::<f64>()
        / n;
    let avg_speed = centroid.speed;
    let speed_variance = members
        .iter()
        .map(|k| (k.speed - avg_speed).powi(2))
        .sum::<f64>()
        / n;
    Ok(GroupObservation {
        avg_change_of_width: centroid.change_of_width,
        avg_change_of_height: centroid.change_of_height,
        avg_speed,
        avg_distance,
        speed_variance,
    })
}

pub fn group_observation(
    tracks: &TrackSet,
    members: &[PersonId],
    t: Frame,
) -> Result<GroupObservation, FeatureError> {
    let ks = members
        .iter()
        .map(|&p| kinematics(tracks, p, t))
        .collect::<Result<Vec<_>, _>>()?;
    group_between(&ks)
}

pub fn body_size_change(
    tracks: &TrackSet,
    person: PersonId,
    t: Frame,
) -> Result<BodySizeChange, FeatureError> {
    let missing = FeatureError::Unavailable { person, frame: t };
    if t == 0 {
        return Err(missing);
    }
    let cur = tracks.sample(t, person).ok_or(missing)?;
    let prev = tracks.sample(t - 1, person).ok_or(missing)?;
    let area = cur.w * cur.h;
    Ok(BodySizeChange((area - prev.w * prev.h).abs() / area))
}
