//! Hierarchical motion-capture (BVH) files.
//!
//! Rotation channels are Euler angles in degrees, composed in the order they
//! are listed: `Zrotation Xrotation Yrotation` gives `R = Rz · Rx · Ry`. A
//! joint's local translation is its offset plus any position channels it
//! carries. End sites are read but are not joints.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{Matrix3, Rotation3, Vector3};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    Xposition,
    Yposition,
    Zposition,
    Xrotation,
    Yrotation,
    Zrotation,
}

impl Channel {
    fn parse(token: &str) -> Option<Channel> {
        Some(match token.to_ascii_lowercase().as_str() {
            "xposition" => Channel::Xposition,
            "yposition" => Channel::Yposition,
            "zposition" => Channel::Zposition,
            "xrotation" => Channel::Xrotation,
            "yrotation" => Channel::Yrotation,
            "zrotation" => Channel::Zrotation,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BvhJoint {
    pub name: String,
    pub parent: Option<usize>,
    pub offset: [f64; 3],
    pub channels: Vec<Channel>,
    /// Index of this joint's first value within a frame row.
    pub channel_start: usize,
}

/// Joints in file order (every parent precedes its children) and the frame
/// rows. A file may hold several root hierarchies.
#[derive(Debug, Clone, PartialEq)]
pub struct Bvh {
    pub joints: Vec<BvhJoint>,
    pub frame_time: f64,
    pub frames: Vec<Vec<f64>>,
}

struct Tokens<'a> {
    items: Vec<(usize, &'a str)>,
    pos: usize,
    file: PathBuf,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str, file: &Path) -> Self {
        let items = text
            .lines()
            .enumerate()
            .flat_map(|(i, l)| l.split_whitespace().map(move |t| (i + 1, t)))
            .collect();
        Tokens {
            items,
            pos: 0,
            file: file.to_path_buf(),
        }
    }

    fn line(&self) -> usize {
        self.items
            .get(self.pos)
            .or(self.items.last())
            .map(|t| t.0)
            .unwrap_or(0)
    }

    fn error(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            file: self.file.clone(),
            line: self.line(),
            message: message.into(),
        }
    }

    fn peek(&self) -> Option<&'a str> {
        self.items.get(self.pos).map(|t| t.1)
    }

    fn next(&mut self) -> Result<&'a str> {
        let t = self.peek().ok_or_else(|| self.error("unexpected end of file"))?;
        self.pos += 1;
        Ok(t)
    }

    fn expect(&mut self, word: &str) -> Result<()> {
        let t = self.next()?;
        if t.eq_ignore_ascii_case(word) {
            Ok(())
        } else {
            self.pos -= 1;
            Err(self.error(format!("expected '{word}', found '{t}'")))
        }
    }

    fn number(&mut self) -> Result<f64> {
        let t = self.next()?;
        match t.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => {
                self.pos -= 1;
                Err(self.error(format!("expected a number, found '{t}'")))
            }
        }
    }

    fn vector(&mut self) -> Result<[f64; 3]> {
        Ok([self.number()?, self.number()?, self.number()?])
    }
}

impl Bvh {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, file: &Path) -> Result<Self> {
        let mut tk = Tokens::new(text, file);
        tk.expect("HIERARCHY")?;
        let mut joints = Vec::new();
        let mut width = 0;
        while tk.peek().is_some_and(|t| t.eq_ignore_ascii_case("ROOT")) {
            tk.next()?;
            parse_joint(&mut tk, None, &mut joints, &mut width)?;
        }
        if joints.is_empty() {
            return Err(tk.error("hierarchy has no ROOT"));
        }
        tk.expect("MOTION")?;
        tk.expect("Frames:")?;
        let declared = tk.number()?;
        if declared < 0.0 || declared.fract() != 0.0 {
            return Err(tk.error(format!("frame count {declared} is not a whole number")));
        }
        tk.expect("Frame")?;
        tk.expect("Time:")?;
        let frame_time = tk.number()?;
        if frame_time <= 0.0 {
            return Err(tk.error("frame time must be positive"));
        }
        // frame rows are line-delimited so a short row is caught where it occurs
        let mut frames = Vec::with_capacity(declared as usize);
        while tk.peek().is_some() {
            let line = tk.line();
            let mut row = Vec::with_capacity(width);
            while tk.peek().is_some() && tk.line() == line {
                row.push(tk.number()?);
            }
            if row.len() != width {
                return Err(Error::Parse {
                    file: file.to_path_buf(),
                    line,
                    message: format!("frame row has {} values, hierarchy declares {width} channels", row.len()),
                });
            }
            frames.push(row);
        }
        if frames.len() != declared as usize {
            return Err(tk.error(format!("header declares {declared} frames but {} rows follow", frames.len())));
        }
        Ok(Bvh {
            joints,
            frame_time,
            frames,
        })
    }

    pub fn roots(&self) -> Vec<usize> {
        (0..self.joints.len()).filter(|&j| self.joints[j].parent.is_none()).collect()
    }

    /// Joint indices of the hierarchy under `root`, in file order.
    pub fn subtree(&self, root: usize) -> Vec<usize> {
        let mut inside = vec![false; self.joints.len()];
        let mut out = Vec::new();
        for j in 0..self.joints.len() {
            let member = j == root || self.joints[j].parent.is_some_and(|p| inside[p]);
            if member {
                inside[j] = true;
                out.push(j);
            }
        }
        out
    }

    /// Local rotation and translation of `joint` at `frame`.
    pub fn local_transform(&self, joint: usize, frame: usize) -> (Matrix3<f64>, Vector3<f64>) {
        let jt = &self.joints[joint];
        let row = &self.frames[frame];
        let mut rot = Matrix3::identity();
        let mut trans = Vector3::from(jt.offset);
        for (k, ch) in jt.channels.iter().enumerate() {
            let v = row[jt.channel_start + k];
            let axis = match ch {
                Channel::Xposition => {
                    trans.x += v;
                    continue;
                }
                Channel::Yposition => {
                    trans.y += v;
                    continue;
                }
                Channel::Zposition => {
                    trans.z += v;
                    continue;
                }
                Channel::Xrotation => Vector3::x_axis(),
                Channel::Yrotation => Vector3::y_axis(),
                Channel::Zrotation => Vector3::z_axis(),
            };
            rot *= Rotation3::from_axis_angle(&axis, v.to_radians()).into_inner();
        }
        (rot, trans)
    }

    /// World position of every joint at `frame`.
    pub fn world_positions(&self, frame: usize) -> Vec<[f64; 3]> {
        let n = self.joints.len();
        let mut rot = vec![Matrix3::identity(); n];
        let mut pos = vec![Vector3::zeros(); n];
        for j in 0..n {
            let (r, t) = self.local_transform(j, frame);
            match self.joints[j].parent {
                None => {
                    pos[j] = t;
                    rot[j] = r;
                }
                Some(p) => {
                    pos[j] = pos[p] + rot[p] * t;
                    rot[j] = rot[p] * r;
                }
            }
        }
        pos.iter().map(|p| [p.x, p.y, p.z]).collect()
    }
}

fn parse_joint(tk: &mut Tokens, parent: Option<usize>, joints: &mut Vec<BvhJoint>, width: &mut usize) -> Result<()> {
    let name = tk.next()?.to_string();
    tk.expect("{")?;
    tk.expect("OFFSET")?;
    let offset = tk.vector()?;
    let mut channels = Vec::new();
    if tk.peek().is_some_and(|t| t.eq_ignore_ascii_case("CHANNELS")) {
        tk.next()?;
        let n = tk.number()?;
        if n < 0.0 || n.fract() != 0.0 || n > 6.0 {
            return Err(tk.error(format!("invalid channel count {n}")));
        }
        for _ in 0..n as usize {
            let t = tk.next()?;
            let ch = Channel::parse(t).ok_or_else(|| {
                tk.pos -= 1;
                tk.error(format!("unknown channel '{t}'"))
            })?;
            channels.push(ch);
        }
    }
    let index = joints.len();
    joints.push(BvhJoint {
        name,
        parent,
        offset,
        channel_start: *width,
        channels,
    });
    *width += joints[index].channels.len();
    loop {
        let t = tk.next()?;
        if t == "}" {
            return Ok(());
        } else if t.eq_ignore_ascii_case("JOINT") {
            parse_joint(tk, Some(index), joints, width)?;
        } else if t.eq_ignore_ascii_case("End") {
            tk.expect("Site")?;
            tk.expect("{")?;
            tk.expect("OFFSET")?;
            tk.vector()?;
            tk.expect("}")?;
        } else {
            tk.pos -= 1;
            return Err(tk.error(format!("unexpected '{t}' in joint block")));
        }
    }
}
