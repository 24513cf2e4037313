//! On-disk formats: binary parameter checkpoints, binary video files, and
//! flat key-value text files.

mod bytes;
mod checkpoint;
mod dataset_file;
mod kv;

pub use checkpoint::{decode_checkpoint, encode_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use dataset_file::{decode_videos, encode_videos, VIDEO_MAGIC, VIDEO_VERSION};
pub use kv::KeyValues;
