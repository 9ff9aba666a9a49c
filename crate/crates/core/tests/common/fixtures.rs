use std::path::{Path, PathBuf};

use voiceguard::audio::encode_wav_pcm16;
use voiceguard::head::HeadParams;

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_voiceguard")
}

/// Mono 16 kHz tone, `secs` long.
pub fn tone_wav(freq: f32, secs: f32, amp: f32) -> Vec<u8> {
    let n = (16_000.0 * secs) as usize;
    let s: Vec<f32> = (0..n)
        .map(|i| amp * (2.0 * std::f32::consts::PI * freq * i as f32 / 16_000.0).sin())
        .collect();
    encode_wav_pcm16(&s, 1, 16_000)
}

pub fn silence_wav(secs: f32) -> Vec<u8> {
    encode_wav_pcm16(&vec![0.0; (16_000.0 * secs) as usize], 1, 16_000)
}

pub fn write(dir: &Path, name: &str, bytes: &[u8]) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, bytes).unwrap();
    p
}

/// A standard-shape head saved to `dir`.
pub fn head_file(dir: &Path, seed: u64) -> PathBuf {
    let p = dir.join(format!("head-{seed}.vshp"));
    HeadParams::standard(seed).save(&p).unwrap();
    p
}

/// Executable speaking the external encoder protocol, delegating to the
/// binary's hidden stub backend.
#[cfg(unix)]
pub fn stub_backend_script(dir: &Path, extra: &str) -> PathBuf {
    use std::os::unix::fs::PermissionsExt;
    let p = dir.join("encoder.sh");
    std::fs::write(&p, format!("#!/bin/sh\nexec '{}' backend-stub {extra} \"$@\"\n", bin())).unwrap();
    std::fs::set_permissions(&p, std::fs::Permissions::from_mode(0o755)).unwrap();
    p
}

#[cfg(unix)]
pub fn failing_backend_script(dir: &Path) -> PathBuf {
    use std::os::unix::fs::PermissionsExt;
    let p = dir.join("broken.sh");
    std::fs::write(&p, "#!/bin/sh\necho 'model weights missing' >&2\nexit 1\n").unwrap();
    std::fs::set_permissions(&p, std::fs::Permissions::from_mode(0o755)).unwrap();
    p
}
