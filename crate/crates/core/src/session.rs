//! Synthetic recording sessions: a subject rests, then holds a sequence of
//! expressions in front of the phone while chirps play.
//!
//! A [`SessionPlan`] fixes the expression timeline; a [`FaceModel`] maps each
//! expression to the motion of the face reflector. Together with a room of
//! static reflectors they yield a [`Scene`] and per-frame ground truth.

use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::{
    au_trajectory, round_trip_delay, AuTrajectoryParams, ChannelError, NoiseSpec, Reflector, Scene,
    ScheduledTrajectory, Trajectory,
};
use crate::chirp::ChirpConfig;
use crate::expression::ExpressionLabel;

/// One held expression.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExpressionBlock {
    pub expression: ExpressionLabel,
    pub duration_s: f64,
}

/// Timeline of a session: an unlabeled rest, then expression blocks. The
/// first `ramp_s` seconds of every block are a transition and stay unlabeled.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SessionPlan {
    pub rest_s: f64,
    pub ramp_s: f64,
    pub blocks: Vec<ExpressionBlock>,
    pub seed: u64,
}

/// Labeled time span `[start_s, end_s)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabeledInterval {
    pub start_s: f64,
    pub end_s: f64,
    pub expression: ExpressionLabel,
}

impl SessionPlan {
    /// `repeats` blocks of every expression, each `block_s` long, in an order
    /// shuffled by `seed`.
    pub fn balanced(repeats: usize, block_s: f64, seed: u64) -> Self {
        Self::shuffled(&ExpressionLabel::ALL, repeats, block_s, seed)
    }

    /// `repeats` blocks of each of `expressions`, shuffled by `seed`.
    pub fn shuffled(expressions: &[ExpressionLabel], repeats: usize, block_s: f64, seed: u64) -> Self {
        let mut blocks: Vec<ExpressionBlock> = (0..repeats)
            .flat_map(|_| expressions.iter().copied())
            .map(|expression| ExpressionBlock { expression, duration_s: block_s })
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(3);
        blocks.shuffle(&mut rng);
        Self { rest_s: 4.5, ramp_s: 1.0, blocks, seed }
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        if !(self.rest_s.is_finite() && self.rest_s >= 0.0) {
            return Err(ChannelError::InvalidTrajectory("rest duration must be non-negative"));
        }
        if !(self.ramp_s.is_finite() && self.ramp_s >= 0.0) {
            return Err(ChannelError::InvalidTrajectory("ramp must be non-negative"));
        }
        if self.blocks.iter().any(|b| !(b.duration_s.is_finite() && b.duration_s > self.ramp_s)) {
            return Err(ChannelError::InvalidTrajectory("every block must outlast the ramp"));
        }
        Ok(())
    }

    pub fn duration_s(&self) -> f64 {
        self.rest_s + self.blocks.iter().map(|b| b.duration_s).sum::<f64>()
    }

    /// Start time of every block.
    pub fn block_starts(&self) -> Vec<f64> {
        let mut t = self.rest_s;
        self.blocks
            .iter()
            .map(|b| {
                let s = t;
                t += b.duration_s;
                s
            })
            .collect()
    }

    pub fn labeled_intervals(&self) -> Vec<LabeledInterval> {
        self.block_starts()
            .into_iter()
            .zip(&self.blocks)
            .map(|(s, b)| LabeledInterval {
                start_s: s + self.ramp_s,
                end_s: s + b.duration_s,
                expression: b.expression,
            })
            .collect()
    }

    /// Expression of a span, if it lies inside one labeled interval.
    pub fn label_for_span(&self, start_s: f64, end_s: f64) -> Option<ExpressionLabel> {
        self.labeled_intervals()
            .into_iter()
            .find(|iv| start_s >= iv.start_s && end_s <= iv.end_s)
            .map(|iv| iv.expression)
    }

    /// Whole chirp frames that fit in the session.
    pub fn frame_count(&self, chirp: &ChirpConfig) -> usize {
        (self.duration_s() / chirp.frame_period()).floor() as usize
    }
}

/// Face displacement and reflectivity for one expression, relative to rest.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExpressionProfile {
    /// Shift of the mean round-trip delay, s.
    pub delay_offset: f64,
    /// Mean attenuation while the expression is held.
    pub attenuation: f64,
    /// Peak delay excursion before the expression's modulation weight, s.
    pub delay_swing: f64,
    pub attenuation_swing: f64,
    /// Modulation rate, Hz.
    pub tempo: f64,
}

/// Synthetic face reflector. All magnitudes are invented; they only need to
/// be plausible for a face about 30 cm from the phone.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FaceModel {
    pub rest_delay: f64,
    pub rest_attenuation: f64,
    /// Indexed by [`ExpressionLabel::index`].
    pub profiles: [ExpressionProfile; 4],
    /// Slow head sway on the delay: swing (s) and rate (Hz).
    pub sway_swing: f64,
    pub sway_hz: f64,
    /// Blinks as raised-cosine delay bumps.
    pub blink_height: f64,
    pub blink_width_s: f64,
    pub blink_interval_s: f64,
    /// Per-session uniform jitter on delays (s) and attenuations.
    pub delay_jitter: f64,
    pub attenuation_jitter: f64,
}

impl Default for FaceModel {
    fn default() -> Self {
        let profile = |delay_offset_us: f64, attenuation: f64, tempo: f64| ExpressionProfile {
            delay_offset: delay_offset_us * 1e-6,
            attenuation,
            delay_swing: 3e-6,
            attenuation_swing: 0.05,
            tempo,
        };
        Self {
            rest_delay: round_trip_delay(0.30),
            rest_attenuation: 0.30,
            profiles: [
                profile(4.0, 0.42, 0.9),
                profile(-2.0, 0.28, 0.5),
                profile(-9.0, 0.24, 1.1),
                profile(13.0, 0.34, 0.7),
            ],
            sway_swing: 0.4e-6,
            sway_hz: 0.23,
            blink_height: 1.5e-6,
            blink_width_s: 0.3,
            blink_interval_s: 3.5,
            delay_jitter: 0.5e-6,
            attenuation_jitter: 0.01,
        }
    }
}

impl FaceModel {
    pub fn profile(&self, expression: ExpressionLabel) -> &ExpressionProfile {
        &self.profiles[expression.index()]
    }

    /// Moving face reflector following `plan`. Random choices (jitter,
    /// modulation phases, blink times) come from the plan's seed.
    pub fn reflector(&self, plan: &SessionPlan) -> Result<Reflector, ChannelError> {
        plan.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
        rng.set_stream(4);
        let dj = rng.random_range(-1.0..=1.0) * self.delay_jitter;
        let aj = rng.random_range(-1.0..=1.0) * self.attenuation_jitter;
        let rest_delay = self.rest_delay + dj;

        let mut delay_segments = alloc::vec![ScheduledTrajectory {
            start_s: 0.0,
            trajectory: Trajectory::constant(rest_delay),
        }];
        let mut att_segments = alloc::vec![ScheduledTrajectory {
            start_s: 0.0,
            trajectory: Trajectory::constant(self.rest_attenuation + aj),
        }];
        for (start, block) in plan.block_starts().into_iter().zip(&plan.blocks) {
            let p = self.profile(block.expression);
            let params = AuTrajectoryParams {
                expression: block.expression,
                base_delay: rest_delay + p.delay_offset,
                delay_swing: p.delay_swing,
                attenuation_base: p.attenuation + aj,
                attenuation_swing: p.attenuation_swing,
                tempo: p.tempo * rng.random_range(0.9..1.1),
            };
            params.validate()?;
            let au = au_trajectory(&params);
            let shift = rng.random_range(0.0..2.0 * PI);
            delay_segments.push(ScheduledTrajectory { start_s: start, trajectory: with_phase(au.delay, shift) });
            att_segments.push(ScheduledTrajectory { start_s: start, trajectory: with_phase(au.attenuation, shift) });
        }

        let mut blinks = Vec::new();
        let duration = plan.duration_s();
        let mut t = rng.random_range(0.3..1.0) * self.blink_interval_s;
        while self.blink_interval_s > 0.0 && t < duration {
            blinks.push(t);
            t += self.blink_interval_s * rng.random_range(0.6..1.4);
        }
        let sway_phase = rng.random_range(0.0..2.0 * PI);

        let delay = Trajectory::Sum {
            terms: alloc::vec![
                Trajectory::Schedule { segments: delay_segments, ramp_s: plan.ramp_s },
                Trajectory::Sine { base: 0.0, swing: self.sway_swing, freq_hz: self.sway_hz, phase_rad: sway_phase },
                Trajectory::PulseTrain { height: self.blink_height, width_s: self.blink_width_s, times_s: blinks },
            ],
        };
        let attenuation = Trajectory::Schedule { segments: att_segments, ramp_s: plan.ramp_s };
        Ok(Reflector { name: "face".into(), delay, attenuation, is_static: false })
    }
}

fn with_phase(t: Trajectory, shift: f64) -> Trajectory {
    match t {
        Trajectory::Sine { base, swing, freq_hz, phase_rad } => {
            Trajectory::Sine { base, swing, freq_hz, phase_rad: phase_rad + shift }
        }
        other => other,
    }
}

/// Static paths of a desk setup: the direct speaker-to-microphone path and
/// a few furniture echoes, all well clear of the face's beat bin. The direct
/// path sits on a whole-sample delay so interpolation does not weaken it.
pub fn default_room() -> Vec<Reflector> {
    alloc::vec![
        Reflector::fixed(6.0 / 44_100.0, 0.45).named("direct"),
        Reflector::at_distance(0.75, 0.08).named("monitor"),
        Reflector::at_distance(1.10, 0.06).named("shelf"),
        Reflector::at_distance(1.60, 0.04).named("wall"),
        Reflector::at_distance(2.30, 0.03).named("ceiling"),
    ]
}

/// Ambient sound below the chirp band and faint noise inside it.
pub fn default_noise() -> (NoiseSpec, f64) {
    (NoiseSpec { band_hz: [50.0, 15_000.0], snr_db: 0.0 }, 45.0)
}

/// Room plus face for one session.
pub fn session_scene(
    plan: &SessionPlan,
    face: &FaceModel,
    room: &[Reflector],
    noise: Option<(NoiseSpec, f64)>,
) -> Result<Scene, ChannelError> {
    let mut reflectors = room.to_vec();
    reflectors.push(face.reflector(plan)?);
    let mut scene = Scene::new(reflectors, plan.seed);
    if let Some((ambient, oob)) = noise {
        scene.ambient_noise = Some(ambient);
        scene.out_of_band_noise = Some(oob);
    }
    scene.validate()?;
    Ok(scene)
}

/// Ground truth for one transmitted frame.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FrameTruth {
    pub frame_index: usize,
    /// Frame start, s.
    pub time_s: f64,
    /// `None` during rest and transitions.
    pub label: Option<ExpressionLabel>,
    /// (delay s, attenuation) of every reflector at the chirp midpoint.
    pub reflector_states: Vec<[f64; 2]>,
}

/// Per-frame labels and reflector states for `n_frames` frames.
pub fn frame_truth(plan: &SessionPlan, scene: &Scene, chirp: &ChirpConfig, n_frames: usize) -> Vec<FrameTruth> {
    let period = chirp.frame_period();
    (0..n_frames)
        .map(|m| {
            let t0 = m as f64 * period;
            let mid = t0 + 0.5 * chirp.duration;
            FrameTruth {
                frame_index: m,
                time_s: t0,
                label: plan.label_for_span(t0, t0 + period),
                reflector_states: scene
                    .reflectors
                    .iter()
                    .map(|r| {
                        let (d, a) = r.state(mid);
                        [d, a]
                    })
                    .collect(),
            }
        })
        .collect()
}
