//! Network checkpoints: a single binary file holding every trainable
//! parameter, the batch-norm running statistics, and (optionally) the Adam
//! state, so training can resume exactly where it stopped.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic "SHOCKNN1" | version u32 | degree u32 | node family u8 |
//! side kernel u8 | reserved u8 x2 | step u64 | tensor count u32 |
//! tensor records...
//! ```
//!
//! Each tensor record is `name length u16 | name utf-8 | ndim u8 (always 1) |
//! len u32 | data f32 x len`. Records appear in a fixed canonical order:
//! the parameters as named by [`HedNetwork::params`], then the running
//! statistics from [`HedNetwork::state`], then — when Adam state is
//! included — `adam.m.<param>` and `adam.v.<param>` for every parameter.
//! The loader rejects any deviation with an error naming the offending
//! field, and a save → load → save cycle is byte-identical.

use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::adam::Adam;
use crate::datagen::dataset::{family_byte, family_from_byte};
use crate::error::NnError;
use crate::hed::{HedNetwork, SideKernel};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"SHOCKNN1";
pub const CHECKPOINT_VERSION: u32 = 1;

/// A loaded checkpoint: the reconstructed network, the optimization step
/// counter, and the optimizer state when the file carried one.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub net: HedNetwork<f32>,
    pub step: u64,
    pub adam: Option<Adam<f32>>,
}

fn side_kernel_byte(k: SideKernel) -> u8 {
    match k {
        SideKernel::K1 => 0,
        SideKernel::K3 => 1,
    }
}

fn side_kernel_from_byte(b: u8, path: &Path) -> Result<SideKernel, NnError> {
    match b {
        0 => Ok(SideKernel::K1),
        1 => Ok(SideKernel::K3),
        other => Err(NnError::format(
            path,
            format!("unknown side-kernel byte {other}"),
        )),
    }
}

fn write_tensor(
    w: &mut impl Write,
    name: &str,
    data: &[f32],
    path: &Path,
) -> Result<(), NnError> {
    let mut put = |b: &[u8]| w.write_all(b).map_err(|e| NnError::io(path, e));
    let name_bytes = name.as_bytes();
    put(&(name_bytes.len() as u16).to_le_bytes())?;
    put(name_bytes)?;
    put(&[1u8])?;
    put(&(data.len() as u32).to_le_bytes())?;
    for &v in data {
        put(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Write `net` (and optionally `adam`) to `path`. `step` is the number of
/// completed optimization steps; pass `adam.step` when saving mid-training.
pub fn save_checkpoint(
    path: &Path,
    net: &HedNetwork<f32>,
    adam: Option<&Adam<f32>>,
    step: u64,
) -> Result<(), NnError> {
    if let Some(a) = adam {
        let lens = net.param_lens();
        if a.m.len() != lens.len() {
            return Err(NnError::config(format!(
                "optimizer tracks {} tensors but the network has {}",
                a.m.len(),
                lens.len()
            )));
        }
        for (i, (m, &l)) in a.m.iter().zip(&lens).enumerate() {
            if m.len() != l {
                return Err(NnError::config(format!(
                    "optimizer tensor {i} has {} entries but the parameter has {l}",
                    m.len()
                )));
            }
        }
    }
    let file = std::fs::File::create(path).map_err(|e| NnError::io(path, e))?;
    let mut w = BufWriter::new(file);
    let params = net.params();
    let state = net.state();
    let tensor_count = params.len() + state.len() + adam.map_or(0, |_| 2 * params.len());

    let mut put = |b: &[u8]| w.write_all(b).map_err(|e| NnError::io(path, e));
    put(CHECKPOINT_MAGIC)?;
    put(&CHECKPOINT_VERSION.to_le_bytes())?;
    put(&(net.degree as u32).to_le_bytes())?;
    put(&[
        family_byte(net.node_family),
        side_kernel_byte(net.side_kernel),
        0,
        0,
    ])?;
    put(&step.to_le_bytes())?;
    put(&(tensor_count as u32).to_le_bytes())?;

    for (name, data) in &params {
        write_tensor(&mut w, name, data, path)?;
    }
    for (name, data) in &state {
        write_tensor(&mut w, name, data, path)?;
    }
    if let Some(a) = adam {
        for (i, (name, _)) in params.iter().enumerate() {
            write_tensor(&mut w, &format!("adam.m.{name}"), &a.m[i], path)?;
        }
        for (i, (name, _)) in params.iter().enumerate() {
            write_tensor(&mut w, &format!("adam.v.{name}"), &a.v[i], path)?;
        }
    }
    w.flush().map_err(|e| NnError::io(path, e))
}

fn read_exact(r: &mut impl Read, buf: &mut [u8], path: &Path, what: &str) -> Result<(), NnError> {
    r.read_exact(buf).map_err(|_| {
        NnError::format(
            path,
            format!("file ends inside {what} (truncated or not a checkpoint)"),
        )
    })
}

/// Read one tensor record, checking its name and length against the
/// expectation, and copy the data into `dst`.
fn read_tensor_into(
    r: &mut impl Read,
    expected_name: &str,
    dst: &mut [f32],
    path: &Path,
) -> Result<(), NnError> {
    let mut u16buf = [0u8; 2];
    read_exact(r, &mut u16buf, path, "a tensor-name length")?;
    let name_len = u16::from_le_bytes(u16buf) as usize;
    let mut name_bytes = vec![0u8; name_len];
    read_exact(r, &mut name_bytes, path, "a tensor name")?;
    let name = String::from_utf8(name_bytes)
        .map_err(|_| NnError::format(path, "tensor name is not valid UTF-8"))?;
    if name != expected_name {
        return Err(NnError::format(
            path,
            format!("expected tensor '{expected_name}', found '{name}'"),
        ));
    }
    let mut u8buf = [0u8; 1];
    read_exact(r, &mut u8buf, path, &format!("the rank of '{name}'"))?;
    if u8buf[0] != 1 {
        return Err(NnError::format(
            path,
            format!("tensor '{name}' has rank {} (expected 1)", u8buf[0]),
        ));
    }
    let mut u32buf = [0u8; 4];
    read_exact(r, &mut u32buf, path, &format!("the length of '{name}'"))?;
    let len = u32::from_le_bytes(u32buf) as usize;
    if len != dst.len() {
        return Err(NnError::format(
            path,
            format!(
                "tensor '{name}' holds {len} values but {} are expected",
                dst.len()
            ),
        ));
    }
    let mut f32buf = [0u8; 4];
    for slot in dst.iter_mut() {
        read_exact(r, &mut f32buf, path, &format!("the data of '{name}'"))?;
        *slot = f32::from_le_bytes(f32buf);
    }
    Ok(())
}

/// Load a checkpoint, reconstructing the network it was saved from.
pub fn load_checkpoint(path: &Path) -> Result<Checkpoint, NnError> {
    let file = std::fs::File::open(path).map_err(|e| NnError::io(path, e))?;
    let mut r = BufReader::new(file);

    let mut magic = [0u8; 8];
    read_exact(&mut r, &mut magic, path, "the magic header")?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(NnError::format(
            path,
            "wrong magic bytes; not a network checkpoint",
        ));
    }
    let mut u32buf = [0u8; 4];
    read_exact(&mut r, &mut u32buf, path, "the version field")?;
    let version = u32::from_le_bytes(u32buf);
    if version != CHECKPOINT_VERSION {
        return Err(NnError::format(
            path,
            format!("unsupported checkpoint version {version} (expected {CHECKPOINT_VERSION})"),
        ));
    }
    read_exact(&mut r, &mut u32buf, path, "the degree field")?;
    let degree = u32::from_le_bytes(u32buf) as usize;
    if !(3..=64).contains(&degree) {
        return Err(NnError::format(path, format!("implausible degree {degree}")));
    }
    let mut flags = [0u8; 4];
    read_exact(&mut r, &mut flags, path, "the family and kernel fields")?;
    let node_family = family_from_byte(flags[0], path)?;
    let side_kernel = side_kernel_from_byte(flags[1], path)?;
    let mut u64buf = [0u8; 8];
    read_exact(&mut r, &mut u64buf, path, "the step counter")?;
    let step = u64::from_le_bytes(u64buf);
    read_exact(&mut r, &mut u32buf, path, "the tensor count")?;
    let tensor_count = u32::from_le_bytes(u32buf) as usize;

    let mut net = HedNetwork::<f32>::build(degree, node_family, side_kernel, 0)
        .map_err(|e| NnError::format(path, format!("cannot rebuild network: {e}")))?;
    let param_names: Vec<String> = net.params().iter().map(|(n, _)| n.clone()).collect();
    let n_params = param_names.len();
    let n_state = net.state().len();
    let without_adam = n_params + n_state;
    let with_adam = without_adam + 2 * n_params;
    let has_adam = if tensor_count == without_adam {
        false
    } else if tensor_count == with_adam {
        true
    } else {
        return Err(NnError::format(
            path,
            format!(
                "tensor count {tensor_count} matches neither a bare network ({without_adam}) \
                 nor one with optimizer state ({with_adam})"
            ),
        ));
    };

    for (name, data) in net.params_mut() {
        read_tensor_into(&mut r, &name, data, path)?;
    }
    for (name, data) in net.state_mut() {
        read_tensor_into(&mut r, &name, data, path)?;
    }
    let adam = if has_adam {
        let mut a = Adam::new(&net.param_lens());
        a.step = step;
        for (i, name) in param_names.iter().enumerate() {
            read_tensor_into(&mut r, &format!("adam.m.{name}"), &mut a.m[i], path)?;
        }
        for (i, name) in param_names.iter().enumerate() {
            read_tensor_into(&mut r, &format!("adam.v.{name}"), &mut a.v[i], path)?;
        }
        Some(a)
    } else {
        None
    };

    let mut probe = [0u8; 1];
    if r.read(&mut probe).map_err(|e| NnError::io(path, e))? != 0 {
        return Err(NnError::format(
            path,
            "trailing bytes after the final tensor",
        ));
    }
    Ok(Checkpoint { net, step, adam })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::Dataset;
    use crate::tensor::Tensor4;
    use crate::train::{train, TrainConfig};
    use shocknet_core::basis::NodeFamily;
    use tempfile::tempdir;

    /// A network with non-trivial running stats and a stepped optimizer.
    fn trained_pair(seed: u64) -> (HedNetwork<f32>, Adam<f32>) {
        let mut net = HedNetwork::<f32>::build(3, NodeFamily::Gauss, SideKernel::K1, seed).unwrap();
        let mut adam = Adam::new(&net.param_lens());
        let x = Tensor4::from_vec(
            2,
            1,
            4,
            4,
            (0..32).map(|i| (i as f32) / 31.0).collect(),
        )
        .unwrap();
        let pass = net.forward_train(&x).unwrap();
        let grads = {
            let maps = pass.loss_inputs();
            let labels = Tensor4::from_vec(
                2,
                1,
                4,
                4,
                (0..32).map(|i| f32::from(i % 5 == 0)).collect(),
            )
            .unwrap();
            let loss = crate::loss::deep_supervision_loss(
                &maps,
                &labels,
                1.1,
                crate::loss::WeightConvention::EdgeWeighted,
            )
            .unwrap();
            net.backward(&x, &pass, &loss.grads).unwrap()
        };
        adam.begin_step();
        let tensors = grads.tensors();
        for (idx, (_, p)) in net.params_mut().into_iter().enumerate() {
            adam.update(idx, p, tensors[idx], 0.01).unwrap();
        }
        (net, adam)
    }

    fn all_bits(net: &HedNetwork<f32>) -> Vec<Vec<u32>> {
        net.params()
            .iter()
            .chain(net.state().iter())
            .map(|(_, d)| d.iter().map(|v| v.to_bits()).collect())
            .collect()
    }

    #[test]
    fn roundtrip_is_bitwise_and_resave_is_byte_identical() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("net.ckpt");
        let (net, adam) = trained_pair(3);

        save_checkpoint(&path, &net, Some(&adam), adam.step).unwrap();
        let loaded = load_checkpoint(&path).unwrap();
        assert_eq!(loaded.step, adam.step);
        assert_eq!(loaded.net.degree, 3);
        assert_eq!(loaded.net.node_family, NodeFamily::Gauss);
        assert_eq!(all_bits(&net), all_bits(&loaded.net));
        let la = loaded.adam.as_ref().unwrap();
        assert_eq!(la.step, adam.step);
        for (a, b) in adam.m.iter().zip(&la.m) {
            assert_eq!(
                a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                b.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
            );
        }

        let path2 = dir.path().join("net2.ckpt");
        save_checkpoint(&path2, &loaded.net, loaded.adam.as_ref(), loaded.step).unwrap();
        assert_eq!(
            std::fs::read(&path).unwrap(),
            std::fs::read(&path2).unwrap(),
            "re-saving a loaded checkpoint must reproduce the file byte for byte"
        );
    }

    #[test]
    fn bare_network_checkpoint_omits_optimizer() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bare.ckpt");
        let (net, _) = trained_pair(5);
        save_checkpoint(&path, &net, None, 0).unwrap();
        let loaded = load_checkpoint(&path).unwrap();
        assert!(loaded.adam.is_none());
        assert_eq!(all_bits(&net), all_bits(&loaded.net));
    }

    #[test]
    fn corrupt_files_are_rejected_with_named_fields() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("net.ckpt");
        let (net, adam) = trained_pair(1);
        save_checkpoint(&path, &net, Some(&adam), 7).unwrap();
        let bytes = std::fs::read(&path).unwrap();

        // Truncations at the header, mid-name, and mid-data.
        for cut in [4usize, 20, 33, bytes.len() - 3] {
            let p = dir.path().join("cut.ckpt");
            std::fs::write(&p, &bytes[..cut]).unwrap();
            let err = load_checkpoint(&p).unwrap_err();
            assert!(
                err.to_string().contains("ends inside"),
                "cut at {cut}: {err}"
            );
        }

        // Wrong magic.
        let mut bad = bytes.clone();
        bad[0] ^= 0xFF;
        let p = dir.path().join("magic.ckpt");
        std::fs::write(&p, &bad).unwrap();
        assert!(load_checkpoint(&p)
            .unwrap_err()
            .to_string()
            .contains("magic"));

        // Unsupported version.
        let mut bad = bytes.clone();
        bad[8] = 9;
        let p = dir.path().join("version.ckpt");
        std::fs::write(&p, &bad).unwrap();
        assert!(load_checkpoint(&p)
            .unwrap_err()
            .to_string()
            .contains("version 9"));

        // Tampered first tensor name: header is 32 bytes, then u16 length,
        // then the name bytes.
        let mut bad = bytes.clone();
        bad[34] = b'x';
        let p = dir.path().join("name.ckpt");
        std::fs::write(&p, &bad).unwrap();
        let err = load_checkpoint(&p).unwrap_err().to_string();
        assert!(err.contains("main.0.weight"), "{err}");

        // Trailing garbage.
        let mut bad = bytes.clone();
        bad.push(0);
        let p = dir.path().join("trail.ckpt");
        std::fs::write(&p, &bad).unwrap();
        assert!(load_checkpoint(&p)
            .unwrap_err()
            .to_string()
            .contains("trailing"));
    }

    /// Interrupting training at a checkpoint and resuming reproduces the
    /// uninterrupted run bit for bit.
    #[test]
    fn resumed_training_matches_uninterrupted_run() {
        let px = 4;
        let mut x = Vec::new();
        let mut y = Vec::new();
        for s in 0..6 {
            for jy in 0..px {
                for ix in 0..px {
                    x.push(((s + ix + jy) % 5) as f32 / 4.0);
                    y.push(u8::from(ix == s % px));
                }
            }
        }
        let set = Dataset {
            degree: 3,
            node_family: NodeFamily::Gauss,
            x,
            y,
            families: vec![4; 6],
            classes: vec![1; 6],
        };

        let straight = {
            let mut net =
                HedNetwork::<f32>::build(3, NodeFamily::Gauss, SideKernel::K1, 8).unwrap();
            let mut adam = Adam::new(&net.param_lens());
            let cfg = TrainConfig {
                batch: 3,
                epochs: 4,
                ..TrainConfig::default()
            };
            train(&mut net, &mut adam, &set, &set, &cfg, |_| {}).unwrap();
            all_bits(&net)
        };

        let resumed = {
            let dir = tempdir().unwrap();
            let path = dir.path().join("mid.ckpt");
            let mut net =
                HedNetwork::<f32>::build(3, NodeFamily::Gauss, SideKernel::K1, 8).unwrap();
            let mut adam = Adam::new(&net.param_lens());
            let cfg = TrainConfig {
                batch: 3,
                epochs: 2,
                ..TrainConfig::default()
            };
            train(&mut net, &mut adam, &set, &set, &cfg, |_| {}).unwrap();
            save_checkpoint(&path, &net, Some(&adam), adam.step).unwrap();

            let mut ck = load_checkpoint(&path).unwrap();
            let mut adam = ck.adam.take().unwrap();
            let cfg = TrainConfig {
                batch: 3,
                epochs: 4,
                start_epoch: 3,
                ..TrainConfig::default()
            };
            train(&mut ck.net, &mut adam, &set, &set, &cfg, |_| {}).unwrap();
            all_bits(&ck.net)
        };

        assert_eq!(straight, resumed);
    }
}
