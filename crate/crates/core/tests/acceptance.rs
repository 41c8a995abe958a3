//! Acceptance checks, one PASS/FAIL line per criterion. Runs without the
//! libtest harness and exits nonzero if any criterion fails.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use binsep::harness::{run_experiment, ExperimentSpec, RECORDS_FILE, SUMMARY_FILE, TIMING_FILE};
use binsep::metrics::{
    build_eval_localizer, count_swaps, doa_error, estimate_doa_track, snr_db, truth_doa_track, DOA_WINDOW,
};
use binsep::net::{
    extraction_forward, fusion_forward, gen_weights, gen_weights_to, localization_forward, speaker_profile_forward,
    ArchitectureDescriptor, Network, Tensor,
};
use binsep::pipeline::{process_stream, PipelineConfig, PipelineOutput};
use binsep::signal::{MonoSignal, StereoSignal};
use binsep::spatial::{
    build_scenario, make_trajectory, mix_at_relative_snr, pure_delay_brirs, spatialize, speech_like, AzimuthGrid,
    Breakpoint, BrirPair, BrirSet, DefaultCorpus, Direction, ScenarioRanges, Trajectory,
};
use binsep::tracker::{
    build_profiles, count_profile_swaps, drift_and_cross, frame_pit_match, triplet_loss,
    DriftCrossParams, EmbeddingFrameSeq, KMeansConfig, OnlineKMeansState, ProfileMode,
};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e2s<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

// 1 ------------------------------------------------------------------------

fn oracle_spatialize(s: &[f64], brirs: &BrirSet, traj: &Trajectory) -> (Vec<f64>, Vec<f64>) {
    let mut l = vec![0.0; s.len()];
    let mut r = vec![0.0; s.len()];
    for n in 0..s.len() {
        let pair = brirs.pair(traj.index_at(n)).unwrap();
        for k in 0..pair.left.len() {
            if k <= n {
                l[n] += pair.left[k] * s[n - k];
                r[n] += pair.right[k] * s[n - k];
            }
        }
    }
    (l, r)
}

fn random_instance(rng: &mut ChaCha8Rng, max_src: usize, max_taps: usize) -> (MonoSignal, BrirSet, Trajectory) {
    let len = rng.gen_range(1..=max_src);
    let taps = rng.gen_range(1..=max_taps);
    let count = rng.gen_range(1..=6);
    let grid = AzimuthGrid::new(-10.0, 5.0, count).unwrap();
    let filters = (0..count)
        .map(|_| BrirPair {
            left: (0..taps).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            right: (0..taps).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        })
        .collect();
    let brirs = BrirSet::new(grid, filters, 16_000, "rand").unwrap();
    let segments = rng.gen_range(1..=4usize.min(len));
    let mut starts: Vec<usize> = (1..len).collect();
    for i in 0..starts.len() {
        let j = rng.gen_range(i..starts.len());
        starts.swap(i, j);
    }
    let mut cuts: Vec<usize> = starts.into_iter().take(segments - 1).collect();
    cuts.sort_unstable();
    let breakpoints = std::iter::once(0)
        .chain(cuts)
        .map(|start_sample| Breakpoint {
            start_sample,
            grid_index: rng.gen_range(0..count),
        })
        .collect();
    let src = MonoSignal::from_samples((0..len).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
    (src, brirs, Trajectory::new(breakpoints).unwrap())
}

fn c1_spatializer() -> Check {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let run = |n: usize, max_src: usize, max_taps: usize, rng: &mut ChaCha8Rng| {
        let mut worst = 0.0f64;
        for _ in 0..n {
            let (src, brirs, traj) = random_instance(rng, max_src, max_taps);
            let y = spatialize(&src, &brirs, &traj).unwrap();
            let (l, r) = oracle_spatialize(src.samples(), &brirs, &traj);
            for (a, b) in y.left().samples().iter().zip(&l).chain(y.right().samples().iter().zip(&r)) {
                worst = worst.max((a - b).abs());
            }
        }
        worst
    };
    let small = run(200, 512, 64, &mut rng);
    // longer runs also exercise the FFT path
    let long = run(10, 6000, 600, &mut rng);
    let worst = small.max(long);
    let secs = started.elapsed().as_secs_f64();
    ensure(worst <= 1e-10, || format!("max deviation {worst:.3e}"))?;
    ensure(secs < 10.0, || format!("took {secs:.2} s"))?;
    Ok(format!("200 instances max |Δ| {small:.2e}; FFT-path max |Δ| {long:.2e}; {secs:.2} s"))
}

// 2 ------------------------------------------------------------------------

fn c2_relative_snr() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let len = rng.gen_range(100..3000);
        let mut ch = |g: f64| (0..len).map(|_| g * rng.gen_range(-1.0..1.0)).collect::<Vec<f64>>();
        let a = StereoSignal::from_channels(ch(1.0), ch(0.3)).unwrap();
        let b = StereoSignal::from_channels(ch(0.05), ch(2.0)).unwrap();
        let want = rng.gen_range(0.0..=5.0);
        let (_, g) = mix_at_relative_snr(&a, &b, want).map_err(e2s)?;
        let ratio = a.energy() / b.scaled(g).energy();
        worst = worst.max((ratio / 10f64.powf(want / 10.0) - 1.0).abs());
    }
    let grid = AzimuthGrid::frontal();
    let brirs = pure_delay_brirs(grid, 1).map_err(e2s)?;
    for seed in 0..5 {
        let spec = ScenarioRanges::new(0.5).sample("s", seed, &grid).map_err(e2s)?;
        let sc = build_scenario(&spec, &brirs, &DefaultCorpus::synthetic()).map_err(e2s)?;
        let r = sc.scaled_references();
        let ratio = r[0].energy() / r[1].energy();
        worst = worst.max((ratio / 10f64.powf(spec.rel_snr_db / 10.0) - 1.0).abs());
    }
    ensure(worst <= 1e-9, || format!("relative error {worst:.3e}"))?;
    Ok(format!("205 mixes, max relative error {worst:.2e}"))
}

// 3 ------------------------------------------------------------------------

fn c3_pit() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let l1 = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>();
    for case in 0..1000 {
        let d = rng.gen_range(1..=16);
        let est: Vec<f64> = (0..2 * d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let ora: Vec<f64> = (0..2 * d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let m = frame_pit_match(
            &EmbeddingFrameSeq::new(2, d, est.clone()).unwrap(),
            &EmbeddingFrameSeq::new(2, d, ora.clone()).unwrap(),
        )
        .map_err(e2s)?;
        let slot = |v: &[f64], i: usize| v[i * d..(i + 1) * d].to_vec();
        let keep = l1(&slot(&est, 0), &slot(&ora, 0)) + l1(&slot(&est, 1), &slot(&ora, 1));
        let swap = l1(&slot(&est, 1), &slot(&ora, 0)) + l1(&slot(&est, 0), &slot(&ora, 1));
        let (perm, loss) = if swap < keep { (vec![1, 0], swap) } else { (vec![0, 1], keep) };
        ensure(m.permutations[0] == perm && (m.loss - loss).abs() <= 1e-12, || {
            format!("case {case}: {:?}/{} vs exhaustive {perm:?}/{loss}", m.permutations[0], m.loss)
        })?;
    }
    let a = EmbeddingFrameSeq::new(2, 3, vec![1.0, 2.0, 3.0, -1.0, 0.0, 4.0]).unwrap();
    let id = frame_pit_match(&a, &a).map_err(e2s)?;
    let swapped = a.permuted(&[vec![1, 0]]).map_err(e2s)?;
    let sw = frame_pit_match(&swapped, &a).map_err(e2s)?;
    ensure(id.loss == 0.0 && id.permutations == [vec![0, 1]], || "identity case".into())?;
    ensure(sw.loss == 0.0 && sw.permutations == [vec![1, 0]], || "swap case".into())?;
    Ok("1000 random frames match exhaustive search; identity and swap cases exact".into())
}

// 4 ------------------------------------------------------------------------

fn c4_triplet() -> Check {
    let (t, d, m) = (6, 4, 1.0);
    let pairs: Vec<(usize, usize)> = (0..t).flat_map(|p| (0..t).map(move |q| (p, q))).collect();
    let mut sep = Vec::new();
    for _ in 0..t {
        sep.extend([0.0; 4]);
        sep.extend([0.25, 0.25, 0.25, 0.25 + 1e-9]);
    }
    let separated = triplet_loss(&EmbeddingFrameSeq::new(2, d, sep).unwrap(), &pairs, m).map_err(e2s)?;
    let same = EmbeddingFrameSeq::new(3, d, vec![0.7; 3 * d * t]).unwrap();
    let degenerate = triplet_loss(&same, &pairs, m).map_err(e2s)?;
    let terms = 3 * 2 * pairs.len();
    ensure(separated == 0.0, || format!("separated loss {separated}"))?;
    ensure(degenerate == m * terms as f64, || format!("degenerate loss {degenerate}, want {}", m * terms as f64))?;
    Ok(format!("separated 0; degenerate {degenerate} = m·{terms}"))
}

// 5 ------------------------------------------------------------------------

fn c5_kmeans() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    // invariant on unstructured streams
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let d = rng.gen_range(1..8);
        let mut st = OnlineKMeansState::new(2, d, KMeansConfig::default()).unwrap();
        let mut sums = vec![vec![0.0; d]; 2];
        let mut counts = [0usize; 2];
        for _ in 0..200 {
            let frame: Vec<f64> = (0..2 * d).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let step = st.step(&frame).map_err(e2s)?;
            for (slot, &k) in step.assignment.iter().enumerate() {
                counts[k] += 1;
                for (s, v) in sums[k].iter_mut().zip(&frame[slot * d..(slot + 1) * d]) {
                    *s += v;
                }
            }
            for k in 0..2 {
                for (c, s) in st.centroid(k).iter().zip(&sums[k]) {
                    worst = worst.max((c - s / counts[k] as f64).abs());
                }
            }
        }
    }
    ensure(worst <= 1e-12, || format!("centroid vs assigned mean {worst:.3e}"))?;

    // purity and batch agreement on well separated clusters
    let d = 8;
    let sigma = 1.0;
    let noise = Normal::new(0.0, sigma).unwrap();
    let offset = 10.0 * sigma / (d as f64).sqrt();
    let centres = [vec![0.0; d], vec![offset; d]];
    let mut st = OnlineKMeansState::new(2, d, KMeansConfig::default()).unwrap();
    let mut labelled: Vec<(usize, usize, Vec<f64>)> = Vec::new();
    for _ in 0..500 {
        let order = if rng.gen_bool(0.5) { [0, 1] } else { [1, 0] };
        let vecs: Vec<Vec<f64>> = order
            .iter()
            .map(|&c| centres[c].iter().map(|m| m + noise.sample(&mut rng)).collect())
            .collect();
        let frame: Vec<f64> = vecs.concat();
        let step = st.step(&frame).map_err(e2s)?;
        for (slot, v) in vecs.into_iter().enumerate() {
            labelled.push((order[slot], step.assignment[slot], v));
        }
    }
    let map0 = labelled[0].1;
    let pure = labelled.iter().all(|(truth, got, _)| (*truth == 0) == (*got == map0));
    ensure(pure, || "label purity below 100%".into())?;

    // Lloyd iterations over the whole stream, seeded like the online pass
    let l1 = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>();
    let mut batch = vec![labelled[0].2.clone(), labelled[1].2.clone()];
    let mut online_cluster = vec![labelled[0].1, labelled[1].1];
    online_cluster.dedup();
    for _ in 0..50 {
        let mut sums = vec![vec![0.0; d]; 2];
        let mut n = [0usize; 2];
        for (_, _, v) in &labelled {
            let k = if l1(v, &batch[0]) <= l1(v, &batch[1]) { 0 } else { 1 };
            n[k] += 1;
            sums[k].iter_mut().zip(v).for_each(|(s, x)| *s += x);
        }
        batch = sums.iter().zip(n).map(|(s, c)| s.iter().map(|v| v / c as f64).collect()).collect();
    }
    let mut agree = 0.0f64;
    for (slot, b) in batch.iter().enumerate() {
        let k = labelled[slot].1;
        agree = agree.max(st.centroid(k).iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs())));
    }
    ensure(agree <= 1e-6, || format!("online vs batch centroids differ by {agree:.3e}"))?;
    Ok(format!("invariant max |Δ| {worst:.1e}; purity 100% over 500 frames; batch |Δ| {agree:.1e}"))
}

// 6 ------------------------------------------------------------------------

fn spliced(a: &StereoSignal, b: &StereoSignal, flips: &[usize]) -> (StereoSignal, StereoSignal) {
    let n = a.len();
    let mut bounds = vec![0];
    bounds.extend_from_slice(flips);
    bounds.push(n);
    let mut o = [(Vec::with_capacity(n), Vec::with_capacity(n)), (Vec::with_capacity(n), Vec::with_capacity(n))];
    for (s, w) in bounds.windows(2).enumerate() {
        let (x, y) = if s % 2 == 0 { (a, b) } else { (b, a) };
        for (dst, src) in [(0, x), (1, y)] {
            o[dst].0.extend_from_slice(&src.left().samples()[w[0]..w[1]]);
            o[dst].1.extend_from_slice(&src.right().samples()[w[0]..w[1]]);
        }
    }
    let [(l0, r0), (l1, r1)] = o;
    (StereoSignal::from_channels(l0, r0).unwrap(), StereoSignal::from_channels(l1, r1).unwrap())
}

fn c6_swaps() -> Check {
    let n = 24 * 16_000;
    let stereo = |spk: u64| {
        let m = speech_like(spk, 9, n);
        StereoSignal::from_channels(m.samples().to_vec(), m.scaled(0.6).samples().to_vec()).unwrap()
    };
    let refs = vec![stereo(1), stereo(2)];
    let id = count_swaps(&refs, &refs, 10).map_err(e2s)?;
    ensure(id.swaps == 0, || format!("identity gave {} swaps", id.swaps))?;
    let (o1, o2) = spliced(&refs[0], &refs[1], &[n / 2]);
    let once = count_swaps(&[o1, o2], &refs, 10).map_err(e2s)?;
    ensure(once.swaps == 1 && once.pattern == "AAAAABBBBB", || {
        format!("mid flip gave {} swaps, pattern {}", once.swaps, once.pattern)
    })?;
    let secs = |v: &[f64]| v.iter().map(|s| (s * 16_000.0) as usize).collect::<Vec<_>>();
    let cases = [secs(&[9.9]), secs(&[5.3, 15.1]), secs(&[4.2, 10.9, 18.5])];
    let mut patterns = Vec::new();
    for (k, flips) in cases.iter().enumerate() {
        let (o1, o2) = spliced(&refs[0], &refs[1], flips);
        let r = count_swaps(&[o1, o2], &refs, 10).map_err(e2s)?;
        ensure(r.swaps == k + 1, || format!("{} flips gave {} swaps", k + 1, r.swaps))?;
        patterns.push(r.pattern);
    }
    Ok(format!("identity 0; mid flip AAAAABBBBB; k-flip patterns {}", patterns.join(" ")))
}

// 7 ------------------------------------------------------------------------

fn c7_tracking() -> Check {
    let params = DriftCrossParams::default();
    let (mut centroid_clean, mut raw_swapping) = (0, 0);
    for seed in 0..50 {
        let s = drift_and_cross(&params, seed).map_err(e2s)?;
        ensure(!s.flips.is_empty(), || format!("stream {seed} has no slot flip"))?;
        let raw = count_profile_swaps(&s.estimates, &s.truth, 10).map_err(e2s)?;
        let profiles = build_profiles(&s.estimates, ProfileMode::Centroid, None, KMeansConfig::default()).map_err(e2s)?;
        let tracked = count_profile_swaps(profiles.embeddings(), &s.truth, 10).map_err(e2s)?;
        raw_swapping += usize::from(raw >= 1);
        centroid_clean += usize::from(tracked == 0);
    }
    ensure(centroid_clean >= 48 && raw_swapping >= 48, || {
        format!("centroid 0-swap {centroid_clean}/50, raw ≥1-swap {raw_swapping}/50")
    })?;
    Ok(format!("centroid profiles 0 swaps in {centroid_clean}/50; raw binding ≥1 swap in {raw_swapping}/50"))
}

// 8 ------------------------------------------------------------------------

fn noise_mix(seed: u64, len: usize) -> StereoSignal {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ch = || (0..len).map(|_| rng.gen_range(-0.3..0.3)).collect::<Vec<f64>>();
    StereoSignal::from_channels(ch(), ch()).unwrap()
}

fn rel_close(a: &[f64], b: &[f64]) -> f64 {
    let scale = a.iter().fold(1e-12f64, |m, v| m.max(v.abs()));
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / scale
}

fn f32s(v: &[f32]) -> Vec<f64> {
    v.iter().map(|x| *x as f64).collect()
}

fn flatten_pipeline(o: &PipelineOutput, samples: usize, frames: usize) -> Vec<f64> {
    let mut v = Vec::new();
    for s in &o.speakers {
        v.extend_from_slice(&s.left().samples()[..samples]);
        v.extend_from_slice(&s.right().samples()[..samples]);
    }
    for m in &o.doa_scores {
        v.extend(f32s(&m.scores()[..frames * m.classes()]));
    }
    let width = o.embeddings.slots() * o.embeddings.dim();
    v.extend_from_slice(&o.embeddings.values()[..frames * width]);
    v.extend_from_slice(&o.profiles.embeddings().values()[..frames * width]);
    v
}

fn c8_streaming() -> Check {
    let w = gen_weights(&ArchitectureDescriptor::default(), 8).map_err(e2s)?;
    let net = Arc::new(Network::load(&w).map_err(e2s)?);
    let hop = net.hop();
    let t = 600;
    let mix = noise_mix(80, t * hop);

    // per-forward chunking: compare frame-aligned outputs
    let per_size = |size: usize| -> Vec<Vec<f64>> {
        let mut fe = net.new_frontend_state();
        let mut sp = net.speaker.new_state();
        let mut st = net.new_speaker_state();
        let d = net.descriptor().embed_dim;
        let mut parts = vec![Vec::new(); 6];
        let mut a = 0;
        while a < t {
            let b = (a + size).min(t);
            let f = net.frontend.process(&mix.slice(a * hop, b * hop), &mut fe).unwrap();
            let emb = speaker_profile_forward(&net, &f, &mut sp).unwrap();
            let p = Tensor::new(
                vec![b - a, d],
                emb.values().chunks(2 * d).flat_map(|c| c[..d].iter().map(|v| *v as f32)).collect(),
            )
            .unwrap();
            let fused = fusion_forward(&net, &f, &p, &mut st.fusion).unwrap();
            let doa = localization_forward(&net, &fused, &p, &mut st.localizer).unwrap();
            let y = extraction_forward(&net, &fused, &p, &doa, &f, &mut st.extraction).unwrap();
            parts[0].extend(f32s(f.features.data()));
            parts[1].extend_from_slice(emb.values());
            parts[2].extend(f32s(fused.data()));
            parts[3].extend(f32s(doa.scores()));
            parts[4].extend_from_slice(y.left().samples());
            parts[5].extend_from_slice(y.right().samples());
            a = b;
        }
        parts
    };
    let reference = per_size(t);
    let mut worst = 0.0f64;
    for size in [1, 16, 256] {
        for (a, b) in reference.iter().zip(per_size(size)) {
            worst = worst.max(rel_close(a, &b));
        }
    }

    // truncation: the first half of the input gives the first half of every output
    let half = t / 2;
    let trunc = {
        let short = mix.slice(0, half * hop);
        let mut fe = net.new_frontend_state();
        let f = net.frontend.process(&short, &mut fe).unwrap();
        f32s(f.features.data())
    };
    worst = worst.max(rel_close(&reference[0][..trunc.len()], &trunc));

    let config = |chunk: usize| PipelineConfig {
        stream_chunk_frames: chunk,
        ..PipelineConfig::default()
    };
    let full = process_stream(Arc::clone(&net), &mix, &config(256), None).map_err(e2s)?;
    let flat = flatten_pipeline(&full, t * hop, t);
    let mut e2e = 0.0f64;
    for chunk in [1, 16] {
        let o = process_stream(Arc::clone(&net), &mix, &config(chunk), None).map_err(e2s)?;
        e2e = e2e.max(rel_close(&flat, &flatten_pipeline(&o, t * hop, t)));
    }
    let cut = process_stream(Arc::clone(&net), &mix.slice(0, half * hop), &config(16), None).map_err(e2s)?;
    e2e = e2e.max(rel_close(&flatten_pipeline(&full, half * hop, half), &flatten_pipeline(&cut, half * hop, half)));

    // a late perturbation leaves every earlier output untouched
    let mut late = mix.left().samples().to_vec();
    late[half * hop..].iter_mut().for_each(|v| *v = -*v * 2.0);
    let perturbed = StereoSignal::from_channels(late, mix.right().samples().to_vec()).unwrap();
    let p = process_stream(Arc::clone(&net), &perturbed, &config(256), None).map_err(e2s)?;
    let causal = flatten_pipeline(&full, half * hop, half) == flatten_pipeline(&p, half * hop, half);
    let changed = flatten_pipeline(&full, t * hop, t) != flatten_pipeline(&p, t * hop, t);

    ensure(worst <= 1e-6, || format!("forward chunking deviation {worst:.3e}"))?;
    ensure(e2e <= 1e-6, || format!("pipeline chunking/truncation deviation {e2e:.3e}"))?;
    ensure(causal && changed, || "late perturbation leaked into earlier outputs".into())?;
    Ok(format!("forwards max rel {worst:.1e}, pipeline max rel {e2e:.1e} over chunks {{1, 16, 256}}; truncation and perturbation causal"))
}

// 9 ------------------------------------------------------------------------

fn c9_snr() -> Check {
    let x = speech_like(3, 4, 16_000);
    let half = snr_db(&x, &x.scaled(0.5)).map_err(e2s)?;
    ensure((half - 6.0206).abs() <= 1e-4 && (half - 20.0 * 2f64.log10()).abs() <= 1e-6, || {
        format!("snr(x, 0.5x) = {half}")
    })?;
    let mut worst = 0.0f64;
    for i in 1..=9 {
        let a = i as f64 / 10.0;
        let got = snr_db(&x, &x.scaled(a)).map_err(e2s)?;
        worst = worst.max((got - (-20.0 * (1.0 - a).log10())).abs());
    }
    ensure(worst <= 1e-6, || format!("α curve deviation {worst:.3e}"))?;
    Ok(format!("snr(x, 0.5x) = {half:.6} dB; α-curve max |Δ| {worst:.1e}"))
}

// 10 -----------------------------------------------------------------------

fn c10_doa() -> Check {
    let grid = AzimuthGrid::frontal();
    let brirs = pure_delay_brirs(grid, 1).map_err(e2s)?;
    let table = build_eval_localizer(&brirs).map_err(e2s)?;
    let mut worst = 0.0f64;
    let mut scored = 0;
    for j in 0..grid.count {
        let src = speech_like(j as u64, 10 + j as u64, 20 * DOA_WINDOW);
        let traj = Trajectory::stationary(j);
        let y = spatialize(&src, &brirs, &traj).map_err(e2s)?;
        let est = estimate_doa_track(&y, &table, DOA_WINDOW).map_err(e2s)?;
        let truth = grid.degrees(j).map_err(e2s)?;
        for e in est.iter().flatten() {
            worst = worst.max((e - truth).abs());
            scored += 1;
        }
    }
    ensure(worst <= 5.0, || format!("static source error up to {worst}°"))?;

    let n = 24 * 16_000;
    let traj = make_trajectory(-40.0, 10.0, Direction::Ccw, 24.0, &grid).map_err(e2s)?;
    let src = speech_like(77, 5, n);
    let y = spatialize(&src, &brirs, &traj).map_err(e2s)?;
    let est = estimate_doa_track(&y, &table, DOA_WINDOW).map_err(e2s)?;
    let truth = truth_doa_track(&traj, &grid, DOA_WINDOW, est.len()).map_err(e2s)?;
    let err = doa_error(&est, &truth).map_err(e2s)?;
    ensure(err.mae_deg <= 7.5, || format!("moving source MAE {:.2}°", err.mae_deg))?;
    Ok(format!(
        "static: {scored} windows over 37 azimuths, max error {worst}°; moving 10°/s: MAE {:.2}° over {} windows",
        err.mae_deg, err.scored
    ))
}

// 11, 12 -------------------------------------------------------------------

fn experiment(dir: &Path, preset: &str, count: usize, duration: f64, jobs: usize) -> ExperimentSpec {
    let text = format!(
        "version = 1\nmaster_seed = 2024\noutput_dir = \"run\"\njobs = {jobs}\n\
         [weights]\nseed = 3\npreset = \"{preset}\"\n\n\
         [[generators]]\ncount = {count}\nduration_s = {duration}\n"
    );
    let path = dir.join("exp.toml");
    std::fs::write(&path, text).unwrap();
    ExperimentSpec::load(&path).unwrap()
}

fn c11_performance() -> Check {
    let dir = tempfile::tempdir().map_err(e2s)?;
    let spec = experiment(dir.path(), "default", 1, 24.0, 1);
    let outcome = run_experiment(&spec).map_err(e2s)?;
    let rtf = outcome.timing.real_time_factor;
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    ensure(rtf < 0.5, || format!("real-time factor {rtf:.3} on {cores} core(s)"))?;
    Ok(format!(
        "real-time factor {rtf:.3} ({:.2} s for {:.1} s audio, default descriptor, {cores} core(s) available)",
        outcome.timing.processing_s, outcome.timing.audio_s
    ))
}

fn files_under(root: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p.strip_prefix(root).unwrap().to_path_buf());
            }
        }
    }
    out.sort();
    out
}

fn c12_determinism() -> Check {
    let a = tempfile::tempdir().map_err(e2s)?;
    let b = tempfile::tempdir().map_err(e2s)?;
    run_experiment(&experiment(a.path(), "tiny", 3, 2.4, 2)).map_err(e2s)?;
    run_experiment(&experiment(b.path(), "tiny", 3, 2.4, 1)).map_err(e2s)?;
    let (ra, rb) = (a.path().join("run"), b.path().join("run"));
    let fa = files_under(&ra);
    ensure(fa == files_under(&rb), || "runs wrote different file sets".into())?;
    let mut compared = 0;
    for f in &fa {
        if f == Path::new(TIMING_FILE) {
            continue;
        }
        let same = std::fs::read(ra.join(f)).unwrap() == std::fs::read(rb.join(f)).unwrap();
        ensure(same, || format!("{} differs", f.display()))?;
        compared += 1;
    }
    ensure(fa.iter().any(|f| f == Path::new(RECORDS_FILE)) && fa.iter().any(|f| f == Path::new(SUMMARY_FILE)), || {
        "reports missing".into()
    })?;
    for d in [ArchitectureDescriptor::default(), ArchitectureDescriptor::tiny()] {
        let (x, y) = (a.path().join("w1.bsrw"), b.path().join("w2.bsrw"));
        gen_weights_to(&d, 99, &x).map_err(e2s)?;
        gen_weights_to(&d, 99, &y).map_err(e2s)?;
        ensure(std::fs::read(&x).unwrap() == std::fs::read(&y).unwrap(), || "weight files differ".into())?;
        compared += 1;
    }
    Ok(format!("{compared} files byte-identical across two runs (jobs 2 vs 1)"))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 12] = [
        ("spatializer oracle equivalence", c1_spatializer),
        ("relative-SNR accuracy", c2_relative_snr),
        ("PIT oracle equivalence", c3_pit),
        ("triplet-loss identities", c4_triplet),
        ("online k-means", c5_kmeans),
        ("swap-counter correctness", c6_swaps),
        ("tracking mechanism demonstration", c7_tracking),
        ("causality and streaming", c8_streaming),
        ("SNR metric identities", c9_snr),
        ("DOA stand-in localizer", c10_doa),
        ("performance", c11_performance),
        ("determinism", c12_determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let res = std::panic::catch_unwind(f).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let secs = started.elapsed().as_secs_f64();
        match res {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{secs:.1} s]", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why} [{secs:.1} s]", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
