//! Shot segmentation and keyframe preparation.

mod prep;
mod shots;

use std::path::Path;

use image::RgbImage;
use serde::{Deserialize, Serialize};

pub use prep::{clahe_luma, gray_entropy, median3x3, prepare_frame, strip_uniform_borders, PrepOptions, PreparedFrame};
pub use shots::{color_histogram, histogram_l1, keyframes_from_labels, segment_shots, ShotRecord};

use crate::{Error, Result};

pub const MIN_SIDE: u32 = 16;

/// A decoded RGB frame from a video.
#[derive(Clone, Debug, PartialEq)]
pub struct RawFrame {
    pub video_id: String,
    pub t_offset_s: f64,
    pub image: RgbImage,
}

impl RawFrame {
    pub fn new(video_id: impl Into<String>, t_offset_s: f64, image: RgbImage) -> Result<Self> {
        check_size(&image)?;
        Ok(RawFrame {
            video_id: video_id.into(),
            t_offset_s,
            image,
        })
    }

    pub fn load(video_id: impl Into<String>, t_offset_s: f64, path: &Path) -> Result<Self> {
        let image = image::open(path)?.to_rgb8();
        Self::new(video_id, t_offset_s, image)
    }
}

fn check_size(image: &RgbImage) -> Result<()> {
    if image.width() < MIN_SIDE || image.height() < MIN_SIDE {
        return Err(Error::DegenerateFrame(format!(
            "{}x{} is below the {MIN_SIDE}x{MIN_SIDE} minimum",
            image.width(),
            image.height()
        )));
    }
    Ok(())
}

/// Where a keyframe came from.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FrameRef {
    pub video_id: String,
    pub shot: u32,
}
