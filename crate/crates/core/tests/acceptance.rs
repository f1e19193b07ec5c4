//! Acceptance report: one PASS/FAIL line per benchmark criterion, with the
//! measured values. Exits non-zero if any criterion fails.

mod common;

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use common::{argmax, energy_in_box, flood_fill, iou_matrix, max_matching, mask_from, naive_dft, random_box, random_mask, single_burst, tone};
use num_complex::Complex64;
use rand::Rng as _;
use wbsr::detect::{connected_components, Connectivity, Detection};
use wbsr::dsp::{self, ComplexBuffer};
use wbsr::grid::{cell_to_box, rasterize, BinaryMask, GridGeometry};
use wbsr::harness::{self, GenerateOptions, SweepSpec};
use wbsr::metrics::{iou, match_detections, Counts, Truth};
use wbsr::modulation::{self, constellation, modulate_analog, modulate_burst, rrc_span, AudioKind, AudioSource, BurstSpec, LINEAR_SPS};
use wbsr::profile::builtin_profile;
use wbsr::sigmf;
use wbsr::{ModulationClass, Rng};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

struct Report {
    failed: usize,
}

impl Report {
    fn run(&mut self, name: &str, limit_s: Option<f64>, f: impl FnOnce() -> Outcome) {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        let outcome = match (outcome, limit_s) {
            (Ok(_), Some(limit)) if secs >= limit => Err(format!("runtime {secs:.1} s exceeds {limit} s")),
            (o, _) => o,
        };
        let limit = limit_s.map(|l| format!(" < {l} s")).unwrap_or_default();
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail} [{secs:.1} s{limit}]"),
            Err(detail) => {
                self.failed += 1;
                println!("FAIL  {name}: {detail} [{secs:.1} s{limit}]");
            }
        }
    }
}

fn numerics() -> Outcome {
    let mut rng = Rng::new(1);
    let mut worst_parseval: f64 = 0.0;
    for n in [64, 512, 1000, 4096] {
        let x: Vec<Complex64> = (0..4 * n)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let frames = dsp::dft(&ComplexBuffer::new(x.clone(), 1.0).unwrap(), n).unwrap();
        for (c, f) in frames.iter().enumerate() {
            let time: f64 = x[c * n..(c + 1) * n].iter().map(|z| z.norm_sqr()).sum();
            let freq: f64 = f.iter().map(|z| z.norm_sqr()).sum::<f64>() / n as f64;
            worst_parseval = worst_parseval.max(((time - freq) / time).abs());
        }
        // The fast transform agrees with the direct sum.
        let mut direct = naive_dft(&x[..n.min(512)]);
        direct.rotate_left(n.min(512) / 2);
        let fast = &dsp::dft(&ComplexBuffer::new(x[..n.min(512)].to_vec(), 1.0).unwrap(), n.min(512)).unwrap()[0];
        let dev = fast.iter().zip(&direct).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        ensure(dev < 1e-9 * n as f64, || format!("fast DFT deviates by {dev}"))?;
    }
    ensure(worst_parseval < 1e-9, || format!("Parseval error {worst_parseval:e}"))?;

    let mut worst_isi: f64 = 0.0;
    for beta in [0.05, 0.1, 0.2, 0.35, 0.5, 0.75, 1.0] {
        for sps in [2, 4, 8] {
            let taps = dsp::design_rrc(beta, sps, rrc_span(beta)).unwrap();
            let rc = dsp::convolve_real(&taps.taps, &taps.taps);
            let center = 2 * taps.delay;
            let mut m = 1;
            while m * sps <= center {
                worst_isi = worst_isi.max(rc[center - m * sps].abs().max(rc[center + m * sps].abs()) / rc[center]);
                m += 1;
            }
        }
    }
    ensure(worst_isi <= 1e-3, || format!("RRC ISI {worst_isi:e}"))?;

    let n = 4096;
    for ratio in [2.0, 0.5, 1.6, 3.0, 0.8] {
        let f_in = 300.0 / n as f64 * ratio;
        let len_in = ((3 * n) as f64 / ratio).ceil() as usize;
        let y = dsp::resample(&ComplexBuffer::new(tone(f_in, len_in), 1.0).unwrap(), ratio).unwrap();
        let frame = &dsp::dft(&ComplexBuffer::new(y.samples()[n..2 * n].to_vec(), 1.0).unwrap(), n).unwrap()[0];
        let peak = argmax(&frame.iter().map(|z| z.norm_sqr()).collect::<Vec<_>>());
        ensure(peak == n / 2 + 300, || format!("ratio {ratio}: peak bin {peak}, want {}", n / 2 + 300))?;
    }

    let sigma = 0.3;
    let y = dsp::add_awgn(&ComplexBuffer::zeros(1_000_000, 1.0), sigma, &mut Rng::new(77)).unwrap();
    let var = y.samples().iter().map(|z| z.norm_sqr()).sum::<f64>() / 1e6;
    let var_err = (var / (sigma * sigma) - 1.0).abs();
    ensure(var_err <= 0.01, || format!("AWGN variance off by {:.3}%", 100.0 * var_err))?;
    Ok(format!(
        "Parseval {worst_parseval:.1e} rel, worst ISI {worst_isi:.2e}, tone peaks exact, AWGN variance within {:.2}%",
        100.0 * var_err
    ))
}

fn modulators() -> Outcome {
    let mut worst_power: f64 = 0.0;
    for class in ModulationClass::ALL {
        let y = modulation::modulate(&BurstSpec::new(class, 100_000, 0.35, 11)).unwrap();
        let p = dsp::mean_power(y.samples());
        worst_power = worst_power.max((p - 1.0).abs());
    }
    ensure(worst_power <= 0.01, || format!("unit power off by {worst_power:.4}"))?;

    let g = modulation::modulate(&BurstSpec::new(ModulationClass::Gmsk, 50_000, 0.35, 2)).unwrap();
    let env = g.samples().iter().map(|z| (z.norm() - 1.0).abs()).fold(0.0, f64::max);
    ensure(env < 1e-6, || format!("GMSK envelope ripple {env:e}"))?;

    let mut symbols_checked = 0;
    for class in [ModulationClass::Psk2, ModulationClass::Psk4, ModulationClass::Psk8, ModulationClass::Qam16, ModulationClass::Qam64, ModulationClass::Qam256] {
        for beta in [0.1, 0.35, 1.0] {
            let len = 40_000;
            let burst = modulate_burst(&BurstSpec::new(class, len, beta, 3)).unwrap();
            let taps = dsp::design_rrc(beta, LINEAR_SPS, rrc_span(beta)).unwrap();
            let mf = dsp::filter_aligned(burst.buffer.samples(), &taps);
            let points = constellation(class).unwrap();
            let guard = rrc_span(beta) / 2 + 2;
            for k in guard..len / LINEAR_SPS - guard {
                let z = mf[k * LINEAR_SPS] / burst.gain;
                let nearest = (0..points.len()).min_by(|&a, &b| (points[a] - z).norm().total_cmp(&(points[b] - z).norm())).unwrap();
                ensure(nearest as u32 == burst.symbols[k], || format!("{class} beta {beta}: symbol {k} wrong"))?;
                symbols_checked += 1;
            }
        }
    }

    let n = 1 << 16;
    let mut worst_ssb = f64::INFINITY;
    let tone: Vec<f64> = (0..n).map(|i| (2.0 * PI * 0.02 * i as f64).cos()).collect();
    let sources = [
        tone,
        AudioSource::new(AudioKind::Music, n).generate(&mut Rng::new(4)),
        AudioSource::new(AudioKind::Speech, n).generate(&mut Rng::new(4)),
    ];
    for audio in &sources {
        let y = modulate_analog(ModulationClass::AmSsb, audio).unwrap();
        let spec = dsp::averaged_spectrum(y.samples(), 1024);
        let upper: f64 = spec[513..].iter().sum();
        let lower: f64 = spec[..512].iter().sum();
        worst_ssb = worst_ssb.min(10.0 * (upper / lower).log10());
    }
    ensure(worst_ssb >= 40.0, || format!("SSB image rejection {worst_ssb:.1} dB"))?;
    Ok(format!(
        "power within {:.2}%, GMSK ripple {env:.1e}, {symbols_checked} PSK/QAM symbols recovered, SSB rejection {worst_ssb:.1} dB",
        100.0 * worst_power
    ))
}

fn geometry() -> Outcome {
    let mut worst = (1.0, String::new());
    for class in ModulationClass::ALL {
        for (bw, center) in [(0.1, 0.13), (0.03, -0.3)] {
            let b = single_burst(class, center, bw, 20_000, 1 << 17, 17);
            let frac = energy_in_box(&b, 1 << 18, 512, 40.0, 1);
            if frac < worst.0 {
                worst = (frac, format!("{class} bw {bw}"));
            }
        }
    }
    ensure(worst.0 >= 0.85, || format!("{}: {:.1}% in box", worst.1, 100.0 * worst.0))?;
    let g = GridGeometry::with_frames(32, 32);
    for t in 0..32 {
        for k in 0..32 {
            let m = rasterize(&[cell_to_box(t, k, &g).unwrap()], &g);
            let mut want = BinaryMask::new(g);
            want.set(t, k, true);
            ensure(m == want, || format!("cell ({t}, {k}) does not round trip"))?;
        }
    }
    Ok(format!("worst containment {:.1}% ({}), 1024 cells round trip", 100.0 * worst.0, worst.1))
}

fn cc_oracle() -> Outcome {
    let mut rng = Rng::new(2024);
    let mut components = 0;
    for trial in 0..1000 {
        let frames = rng.random_range(1..=64);
        let bins = rng.random_range(1..=64);
        let density = rng.random_range(0.05..0.7);
        let cells = random_mask(&mut rng, frames, bins, density);
        let mask = mask_from(frames, bins, cells.clone());
        for (conn, eight) in [(Connectivity::Four, false), (Connectivity::Eight, true)] {
            let got: Vec<_> = connected_components(&mask, conn)
                .into_iter()
                .map(|c| c.into_iter().collect::<std::collections::BTreeSet<_>>())
                .collect();
            let want = flood_fill(&cells, frames, bins, eight);
            ensure(got == want, || format!("trial {trial} ({frames}x{bins}, eight={eight}) differs"))?;
            components += want.len();
        }
    }
    Ok(format!("1000 masks x 2 connectivities, {components} components identical"))
}

fn matching() -> Outcome {
    let mut rng = Rng::new(31);
    let mut gaps = 0;
    for trial in 0..500 {
        let nd = rng.random_range(0..=5);
        let nt = rng.random_range(0..=5);
        let truths: Vec<_> = (0..nt).map(|_| random_box(&mut rng)).collect();
        let dets: Vec<_> = (0..nd)
            .map(|_| {
                if nt > 0 && rng.random_bool(0.7) {
                    let t = truths[rng.random_range(0..nt)];
                    t.translate(rng.random_range(-3.0..3.0), rng.random_range(-0.02..0.02)).unwrap_or(t)
                } else {
                    random_box(&mut rng)
                }
            })
            .collect();
        let d: Vec<Detection> = dets.iter().map(|&b| Detection::new(b, rng.random_range(0.0..1.0))).collect();
        let t: Vec<Truth> = truths.iter().map(|&b| Truth { bbox: b, label: "x".into() }).collect();
        let thr = [0.3, 0.5, 0.75][trial % 3];
        let m = match_detections(&d, &t, thr, false).unwrap();
        let mut used_d = vec![false; nd];
        let mut used_t = vec![false; nt];
        for p in &m.pairs {
            ensure(!used_d[p.detection] && !used_t[p.truth], || format!("trial {trial}: not one-to-one"))?;
            ensure(p.iou >= thr, || format!("trial {trial}: pair below threshold"))?;
            used_d[p.detection] = true;
            used_t[p.truth] = true;
        }
        for &i in &m.unmatched_detections {
            for &j in &m.unmatched_truths {
                ensure(iou(&dets[i], &truths[j]) < thr, || format!("trial {trial}: not maximal"))?;
            }
        }
        let best = max_matching(&iou_matrix(&dets, &truths), thr);
        ensure(2 * m.pairs.len() >= best, || format!("trial {trial}: greedy below half of optimum"))?;
        gaps += best - m.pairs.len();
    }
    let c = Counts::new(8, 4, 2);
    let (p, r, f) = (c.precision(), c.recall(), c.f1());
    ensure((p - 2.0 / 3.0).abs() <= 1e-12 && (r - 0.8).abs() <= 1e-12 && (f - 16.0 / 22.0).abs() <= 1e-12, || {
        format!("fixture gives p {p} r {r} f1 {f}")
    })?;
    Ok(format!(
        "500 instances one-to-one and maximal (greedy short of optimum by {gaps} pairs in total); fixture p {p:.4} r {r:.4} f1 {f:.4}"
    ))
}

fn sigmf_io() -> Outcome {
    let layout = sigmf::encode_samples(&[Complex64::new(1.0, -1.0)], 32000.0);
    ensure(layout == [0x00, 0x7D, 0x00, 0x83], || format!("layout {layout:02X?}"))?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut rng = Rng::new(1);
    let x: Vec<Complex64> = (0..100_000)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let scene = wbsr::scene::Scene {
        record_length: x.len(),
        bursts: Vec::new(),
        samples: ComplexBuffer::new(x, 1.0).unwrap(),
        profile_name: "acceptance".into(),
        master_seed: 0,
    };
    let first = sigmf::write_record(&scene, 1e8, &dir.path().join("a")).map_err(|e| e.to_string())?;
    let back = sigmf::read_record(&first.data_path).map_err(|e| e.to_string())?;
    let second = sigmf::write_with_metadata(&dir.path().join("b"), back.samples.samples(), back.record.meta.clone())
        .map_err(|e| e.to_string())?;
    let (a, b) = (std::fs::read(&first.data_path).unwrap(), std::fs::read(&second.data_path).unwrap());
    ensure(a == b && a.len() == 400_000, || "data bytes differ after write, read, write".into())?;
    ensure(back.record.meta == first.meta, || "metadata differs".into())?;
    Ok("int16 layout 00 7D 00 83, 100000-sample write/read/write byte-identical".into())
}

fn sweep() -> Outcome {
    let spec = SweepSpec::default();
    let out = harness::run_sweep(&spec).map_err(|e| e.to_string())?;
    let rows: Vec<_> = spec
        .snr_points_db
        .iter()
        .map(|&s| out.report.row(Some(s), 0.5).cloned().ok_or(format!("no row for {s} dB")))
        .collect::<Result<_, _>>()?;
    let recalls: Vec<String> = rows.iter().map(|r| format!("{:.2}", r.recall)).collect();
    let summary = format!(
        "{} SNR points x {} repeats x 2^{} samples; recall by SNR [{}]",
        rows.len(),
        spec.repeats,
        spec.record_length.trailing_zeros(),
        recalls.join(" ")
    );
    for w in rows.windows(2) {
        ensure(w[1].recall >= w[0].recall - 0.05, || {
            format!("{summary}; recall drops from {:.3} to {:.3} at {:?} dB", w[0].recall, w[1].recall, w[1].snr_db)
        })?;
    }
    let lo = rows.first().unwrap();
    let hi = rows.last().unwrap();
    ensure(lo.snr_db == Some(-20.0) && hi.snr_db == Some(30.0), || "SNR grid is not -20..30".into())?;
    ensure(hi.recall >= 0.9, || format!("{summary}; recall {:.3} at +30 dB", hi.recall))?;
    ensure(lo.recall <= 0.1, || format!("{summary}; recall {:.3} at -20 dB", lo.recall))?;
    ensure(hi.precision >= 0.8, || format!("{summary}; precision {:.3} at +30 dB", hi.precision))?;
    Ok(format!(
        "{summary}; +30 dB recall {:.3} precision {:.3}; -20 dB recall {:.3}",
        hi.recall, hi.precision, lo.recall
    ))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let profiles = ["ism-burst", "mixed", "analog-broadcast"].map(|n| builtin_profile(n).unwrap());
    let opts = GenerateOptions {
        count: 3,
        seed: 2025,
        ..Default::default()
    };
    let runs: Vec<_> = ["a", "b"]
        .iter()
        .map(|d| harness::cmd_generate(&profiles, &opts, &dir.path().join(d)).map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    let mut bytes = 0;
    let mut names: Vec<_> = std::fs::read_dir(dir.path().join("a")).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    for n in &names {
        let a = std::fs::read(dir.path().join("a").join(n)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(n)).unwrap();
        ensure(a == b, || format!("{} differs", n.to_string_lossy()))?;
        bytes += a.len();
    }
    ensure(runs[0] == runs[1], || "manifests differ".into())?;
    Ok(format!("{} files, {bytes} bytes identical across two runs", names.len()))
}

fn main() -> ExitCode {
    let mut r = Report { failed: 0 };
    r.run("numerics suite", Some(30.0), numerics);
    r.run("modulator suite", Some(60.0), modulators);
    r.run("geometry/energy", Some(60.0), geometry);
    r.run("connected-components oracle", Some(30.0), cc_oracle);
    r.run("matching/metrics", None, matching);
    r.run("SigMF round trip", None, sigmf_io);
    r.run("end-to-end SNR sweep", Some(600.0), sweep);
    r.run("generate determinism", None, determinism);
    if r.failed == 0 {
        println!("acceptance: all criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {} criteria fail", r.failed);
        ExitCode::FAILURE
    }
}
