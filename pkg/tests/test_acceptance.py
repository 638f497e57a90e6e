"""Release gate: one test group per headline criterion.

Each group carries an ``acceptance`` marker; the terminal summary prints a
PASS/FAIL line per criterion at the end of the run. Numeric tolerances are
stated inline next to each assertion.
"""

import itertools
import math

import numpy as np
import pytest
import torch
from scipy.ndimage import fourier_shift

from despeckle.baselines import METHODS as BASELINE_METHODS
from despeckle.baselines import get_denoiser
from despeckle.data import (
    BScan,
    Domain,
    PhantomConfig,
    generate_phantom,
    phantom_batch,
    speckle_average,
)
from despeckle.errors import MaskExtractionError
from despeckle.metrics import (
    benchmark_runtime,
    cnr,
    extract_masks,
    msr,
    psnr,
    register_translation,
    ssim,
)
from despeckle.model import (
    ClassTargets,
    Discriminator,
    DiscriminatorSpec,
    Generator,
    GeneratorSpec,
    TrainConfig,
    build_denoiser,
    count_parameters,
    cycle_loss,
    discriminator_loss,
    discriminator_score_report,
    generator_loss,
    total_loss,
    train,
)
from despeckle.rating import (
    RatingStore,
    create_session,
    draw_presentation_order,
    next_sample_payload,
    submit_rating,
)

from _oracles import brute_cnr, brute_msr, brute_psnr, brute_ssim
from test_inspection import max_rendered_neighbors
from test_model_nets import DISCRIMINATOR_512_SHAPES, GENERATOR_512_SHAPES
from test_rating import METHODS as RATING_METHODS
from test_rating import assert_blinded, make_dataset

from despeckle.inspection import skeletonize_layers


# ---------------------------------------------------------------------------
# adversarial losses match their closed forms


@pytest.mark.acceptance(
    "adversarial-loss-closed-forms",
    "uniform-softmax losses equal 2*ln3 / 4*ln3; weighted total matches hand arithmetic",
)
class TestLossClosedForms:
    def test_uniform_probabilities_give_known_values(self):
        u = torch.full((3,), 1.0 / 3.0, dtype=torch.float64)
        targets = ClassTargets.three_way(dtype=torch.float64)
        lg = generator_loss(u, u, targets).item()
        ld = discriminator_loss(u, u, u, u, targets).item()
        assert abs(lg - 2.0 * math.log(3.0)) < 1e-6
        assert abs(ld - 4.0 * math.log(3.0)) < 1e-6

    def test_weighted_total_matches_hand_arithmetic(self):
        cfg = TrainConfig(lambda_gan=1.0, lambda_cycle=10.0)
        lg = torch.tensor(0.7, dtype=torch.float64)
        ld = torch.tensor(1.3, dtype=torch.float64)
        lc = torch.tensor(0.11, dtype=torch.float64)
        # 1.0 * (0.7 + 1.3) + 10.0 * 0.11 = 3.1
        assert abs(total_loss(lg, ld, lc, cfg).item() - 3.1) < 1e-9

    def test_cycle_term_is_mean_absolute_error_both_ways(self):
        a = torch.zeros(4, 4, dtype=torch.float64)
        b = torch.full((4, 4), 0.5, dtype=torch.float64)
        # |0.25| averaged on one side plus |0.5| on the other
        value = cycle_loss(a, b, a + 0.25, b - 0.5).item()
        assert abs(value - 0.75) < 1e-9


# ---------------------------------------------------------------------------
# analytic gradients agree with finite differences


@pytest.mark.acceptance(
    "analytic-gradient-agreement",
    "backprop through the full objective matches central differences on a <=500-parameter model",
)
class TestAnalyticGradients:
    def test_total_objective_matches_central_differences(self):
        torch.manual_seed(3)
        gen_spec = GeneratorSpec(
            base_channels=1, n_downsample=1, n_resblocks=1, convs_per_resblock=1
        )
        disc_spec = DiscriminatorSpec(
            base_channels=2, n_downsample=1, convs_per_resblock=1, n_classes=3
        )
        g_h = Generator(gen_spec).double()
        g_l = Generator(gen_spec).double()
        d = Discriminator(disc_spec).double()
        assert sum(count_parameters(m) for m in (g_h, g_l, d)) <= 500

        cfg = TrainConfig(epochs=1)
        targets = ClassTargets.three_way(dtype=torch.float64)
        rng = torch.Generator().manual_seed(5)
        l = torch.rand(1, 1, 8, 8, generator=rng, dtype=torch.float64)
        h = torch.rand(1, 1, 8, 8, generator=rng, dtype=torch.float64)

        def objective():
            fake_h = g_h(l)
            fake_l = g_l(h)
            l_rec = g_l(fake_h)
            h_rec = g_h(fake_l)
            loss_g = generator_loss(d(fake_h), d(fake_l), targets)
            loss_d = discriminator_loss(d(fake_h), d(fake_l), d(h), d(l), targets)
            loss_cyc = cycle_loss(l, h, l_rec, h_rec)
            return total_loss(loss_g, loss_d, loss_cyc, cfg)

        objective().backward()
        params = [p for m in (g_h, g_l, d) for p in m.parameters()]
        analytic = [p.grad.clone() for p in params]

        step = 1e-5
        worst = 0.0
        for p, grad in zip(params, analytic):
            flat = p.data.view(-1)
            gflat = grad.view(-1)
            for i in range(flat.numel()):
                orig = flat[i].item()
                flat[i] = orig + step
                with torch.no_grad():
                    f_plus = objective().item()
                flat[i] = orig - step
                with torch.no_grad():
                    f_minus = objective().item()
                flat[i] = orig
                fd = (f_plus - f_minus) / (2.0 * step)
                an = gflat[i].item()
                scale = max(abs(fd), abs(an))
                if scale < 1e-7:
                    continue
                worst = max(worst, abs(fd - an) / scale)
        assert worst < 1e-3


# ---------------------------------------------------------------------------
# default specs reproduce every published layer size at full resolution


@pytest.mark.acceptance(
    "full-size-layer-shapes",
    "default generator and discriminator reproduce every 512x512 stage shape",
)
class TestFullSizeLayerShapes:
    def test_generator_stage_shapes(self):
        torch.manual_seed(0)
        gen = Generator(GeneratorSpec())
        x = torch.rand(1, 1, 512, 512)
        with torch.no_grad():
            out, acts = gen.forward_with_activations(x)
        assert tuple(out.shape) == (1, 1, 512, 512)
        assert set(acts) == set(GENERATOR_512_SHAPES)
        for name, (c, h, w) in GENERATOR_512_SHAPES.items():
            assert tuple(acts[name].shape) == (1, c, h, w), name

    def test_discriminator_stage_shapes(self):
        torch.manual_seed(0)
        disc = Discriminator(DiscriminatorSpec())
        x = torch.rand(1, 1, 512, 512)
        with torch.no_grad():
            probs, acts = disc.forward_with_activations(x)
        for name, (c, h, w) in DISCRIMINATOR_512_SHAPES.items():
            assert tuple(acts[name].shape) == (1, c, h, w), name
        assert tuple(acts["average pooling"].shape) == (1, 1024)
        assert tuple(probs.shape) == (1, 3)


# ---------------------------------------------------------------------------
# quality metrics and registration agree with brute-force references


def _disjoint_masks(rng):
    """Random disjoint signal/background masks with fixed pixel counts."""
    order = rng.permutation(256)
    signal = np.zeros(256, dtype=bool)
    background = np.zeros(256, dtype=bool)
    signal[order[:40]] = True
    background[order[40:100]] = True
    return signal.reshape(16, 16), background.reshape(16, 16)


@pytest.mark.acceptance(
    "metric-and-registration-oracles",
    "psnr/ssim/cnr/msr match loop-based references on 100 instances; shifts recovered",
)
class TestMetricOracles:
    def test_hundred_random_instances(self):
        rng = np.random.default_rng(42)
        for _ in range(100):
            a = rng.random((16, 16))
            b = rng.random((16, 16))
            sa = BScan(a, Domain.HIGH_NOISE, "a")
            sb = BScan(b, Domain.LOW_NOISE, "b")
            assert abs(psnr(sa, sb) - brute_psnr(a, b)) < 1e-9
            assert abs(ssim(sa, sb) - brute_ssim(a, b)) < 1e-6
            signal, background = _disjoint_masks(rng)
            assert abs(cnr(sa, signal, background) - brute_cnr(a, signal, background)) < 1e-12
            assert abs(msr(sa, signal) - brute_msr(a, signal)) < 1e-12

    def test_hundred_integer_shifts_recovered_exactly(self):
        phantoms = [generate_phantom(PhantomConfig(seed=s)).hn for s in range(10)]
        rng = np.random.default_rng(14)
        for i in range(100):
            ref = phantoms[i % len(phantoms)]
            dy, dx = (int(v) for v in rng.integers(-10, 11, size=2))
            moving = ref.with_pixels(np.roll(ref.pixels, (dy, dx), axis=(0, 1)))
            shift = register_translation(ref, moving)
            assert (shift.dy, shift.dx) == (float(dy), float(dx))

    def test_fractional_shifts_within_quarter_pixel(self):
        rng = np.random.default_rng(15)
        base = generate_phantom(PhantomConfig(seed=3)).ln
        for _ in range(10):
            dy, dx = rng.uniform(-8.0, 8.0, size=2)
            moved = np.fft.ifft2(fourier_shift(np.fft.fft2(base.pixels), (dy, dx))).real
            moving = base.with_pixels(np.clip(moved, 0.0, 1.0))
            shift = register_translation(base, moving, subpixel=True)
            assert shift.dy == pytest.approx(dy, abs=0.25)
            assert shift.dx == pytest.approx(dx, abs=0.25)


# ---------------------------------------------------------------------------
# multiplicative noise variance falls as 1/frames


@pytest.mark.acceptance(
    "frame-averaging-variance-law",
    "12-frame vs 60-frame noise variance ratio is 5 within 10 percent",
)
class TestFrameAveragingVarianceLaw:
    def test_variance_ratio_near_five(self):
        rng = np.random.default_rng(7)
        clean = np.full((64, 64), 0.6)  # 4096 Monte-Carlo pixels
        few = speckle_average(clean, 12, rng)
        many = speckle_average(clean, 60, rng)
        ratio = np.var(few - clean) / np.var(many - clean)
        assert abs(ratio - 5.0) <= 0.5


# ---------------------------------------------------------------------------
# every denoiser improves on the unprocessed row


@pytest.fixture(scope="module")
def metric_table():
    pairs = phantom_batch(PhantomConfig(), 50, seed0=0)
    table = {name: {"cnr": [], "msr": [], "psnr": []} for name in BASELINE_METHODS}
    table["raw"] = {"cnr": [], "msr": [], "psnr": []}
    outputs = {"raw": lambda scan: scan}
    outputs.update({name: get_denoiser(name) for name in BASELINE_METHODS})
    for sample in pairs:
        for name, fn in outputs.items():
            result = fn(sample.hn)
            table[name]["psnr"].append(psnr(sample.clean, result))
            try:
                masks = extract_masks(result)
            except MaskExtractionError:
                continue
            assert not np.any(masks.signal & masks.background)
            table[name]["cnr"].append(cnr(result, masks.signal, masks.background))
            table[name]["msr"].append(msr(result, masks.signal))
    return table


@pytest.mark.acceptance(
    "denoisers-beat-raw-ordering",
    "on 50 phantom pairs every denoiser's mean cnr/msr/psnr beats the raw row",
)
class TestDenoisersBeatRaw:
    @pytest.mark.parametrize("metric", ["cnr", "msr", "psnr"])
    def test_every_method_mean_at_least_raw(self, metric_table, metric):
        raw_mean = np.mean(metric_table["raw"][metric])
        for name in BASELINE_METHODS:
            values = metric_table[name][metric]
            assert values, f"{name} produced no {metric} values"
            assert np.mean(values) >= raw_mean, (name, metric, np.mean(values), raw_mean)


# ---------------------------------------------------------------------------
# desk-scale adversarial training denoises held-out phantoms


DESK_GEN = GeneratorSpec(base_channels=8, n_downsample=2, n_resblocks=2, convs_per_resblock=2)
DESK_DISC = DiscriminatorSpec(base_channels=8, n_downsample=3, convs_per_resblock=1, n_classes=3)
DESK_CFG = TrainConfig(
    epochs=50,
    seed=2,
    checkpoint_every=50,
    lambda_cycle=50.0,
    learning_rate=2e-4,
)
DESK_N_TRAIN = 60


@pytest.fixture(scope="module")
def desk_run():
    cfg = PhantomConfig()
    train_hn = [s.hn for s in phantom_batch(cfg, DESK_N_TRAIN, seed0=1000)]
    train_ln = [s.ln for s in phantom_batch(cfg, DESK_N_TRAIN, seed0=2000)]
    held = phantom_batch(cfg, 20, seed0=3000)
    ckpts = train(train_hn, train_ln, DESK_CFG, gen_spec=DESK_GEN, disc_spec=DESK_DISC)
    return ckpts[-1], held


@pytest.mark.acceptance(
    "desk-scale-denoising-gain",
    "50-epoch run gains >=1 dB on held-out phantoms, cycle loss falls 4x, score table emits",
)
class TestDeskScaleTraining:
    def test_denoised_gains_at_least_one_db(self, desk_run):
        ckpt, held = desk_run
        denoise = build_denoiser(ckpt)
        raw = [psnr(s.clean, s.hn) for s in held]
        den = [psnr(s.clean, denoise(s.hn)) for s in held]
        gain = np.mean(den) - np.mean(raw)
        assert gain >= 1.0, f"mean gain {gain:.3f} dB"

    def test_cycle_loss_ends_below_quarter_of_first_epoch(self, desk_run):
        ckpt, _ = desk_run
        rows = ckpt.loss_history
        first = np.mean([r["L_cycle"] for r in rows if r["epoch"] == 1])
        last = np.mean([r["L_cycle"] for r in rows if r["epoch"] == DESK_CFG.epochs])
        assert last < 0.25 * first, f"epoch-1 mean {first:.4f}, final mean {last:.4f}"

    def test_score_report_emits_full_table(self, desk_run, tmp_path):
        ckpt, held = desk_run
        report = discriminator_score_report(
            ckpt, [s.hn for s in held], [s.ln for s in held]
        )
        assert report.mode == "shared_discriminator"
        assert set(report.rows) == {"hn", "ln"}
        for scores in report.rows.values():
            assert len(scores) == 3
            assert abs(sum(scores.values()) - 1.0) < 1e-6
        out = tmp_path / "scores.csv"
        report.to_csv(out)
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "input_domain,score,mean"
        assert len(lines) == 1 + report.entries()


# ---------------------------------------------------------------------------
# boundary skeletons recover constructed layer positions


@pytest.fixture(scope="module")
def skeleton():
    px = np.full((400, 400), 0.02)
    px[99:102, :] = 0.9
    px[299:302, :] = 0.9
    img = BScan(px, Domain.HIGH_NOISE, "two-line")
    return skeletonize_layers(img, np.ones((400, 400)))


@pytest.mark.acceptance(
    "two-line-boundary-recovery",
    "skeletons land within 1 px of constructed lines; thickness 200 +/- 1; curves stay 1 px thin",
)
class TestTwoLineBoundaryRecovery:
    def test_rows_within_one_pixel(self, skeleton):
        ilm = skeleton.ilm_curve[~np.isnan(skeleton.ilm_curve)]
        rpe = skeleton.rpe_curve[~np.isnan(skeleton.rpe_curve)]
        assert ilm.size and rpe.size
        assert np.all(np.abs(ilm - 100.0) <= 1.0)
        assert np.all(np.abs(rpe - 300.0) <= 1.0)

    def test_thickness_within_one_pixel_of_200(self, skeleton):
        thick = skeleton.thickness[~np.isnan(skeleton.thickness)]
        assert thick.size
        assert np.all(np.abs(thick - 200.0) <= 1.0)

    def test_curves_are_single_pixel_thin(self, skeleton):
        assert max_rendered_neighbors(skeleton.ilm_curve) <= 2
        assert max_rendered_neighbors(skeleton.rpe_curve) <= 2


# ---------------------------------------------------------------------------
# runtime harness reports every method and the learned model beats bm3d


@pytest.mark.acceptance(
    "runtime-report-ordering",
    "runtime report covers every method; learned denoiser median beats bm3d on cpu",
)
class TestRuntimeReportOrdering:
    def test_complete_report_and_median_ordering(self):
        cfg = PhantomConfig()
        train_imgs = phantom_batch(cfg, 4, seed0=500)
        tiny = train(
            [s.hn for s in train_imgs],
            [s.ln for s in train_imgs],
            TrainConfig(epochs=1, seed=9, checkpoint_every=1),
            gen_spec=GeneratorSpec(
                base_channels=8, n_downsample=1, n_resblocks=1, convs_per_resblock=1
            ),
            disc_spec=DiscriminatorSpec(
                base_channels=4, n_downsample=2, convs_per_resblock=1, n_classes=3
            ),
        )[-1]
        methods = {name: get_denoiser(name) for name in BASELINE_METHODS}
        methods["ours"] = build_denoiser(tiny)
        images = [s.hn for s in phantom_batch(cfg, 10, seed0=600)]
        report = benchmark_runtime(methods, images, repeats=1)
        assert {r.method for r in report.rows} == set(methods)
        for row in report.rows:
            assert len(row.times) == len(images)
            assert all(t >= 0.0 for t in row.times)
        ours = np.median(report.row("ours").times)
        bm3d = np.median(report.row("bm3d").times)
        assert ours < bm3d, f"median ours {ours:.4f}s vs bm3d {bm3d:.4f}s"


# ---------------------------------------------------------------------------
# rating backend stays blinded, fair, and crash-safe


@pytest.mark.acceptance(
    "blinded-rating-protocol",
    "served payloads leak no method names; orders uniform to 2 percent; logs replay exactly",
)
class TestBlindedRatingProtocol:
    def test_no_method_name_bytes_in_served_payloads(self, tmp_path):
        import json

        dataset = make_dataset(tmp_path / "dataset")
        store = RatingStore(tmp_path / "data")
        session = create_session(store, dataset, RATING_METHODS, 3, "expert-1", seed=5)
        for sample in session.samples:
            payload = next_sample_payload(store, session.session_id)
            assert_blinded(json.dumps(payload).encode())
            for candidate in payload["candidates"]:
                ref = candidate["image"].rsplit("/", 1)[-1]
                assert_blinded(store.image_path(ref).read_bytes())
            submit_rating(
                store,
                session.session_id,
                payload["sample_id"],
                [c["candidate_id"] for c in payload["candidates"]],
            )

    def test_presentation_orders_uniform(self):
        rng = np.random.default_rng(123)
        counts = {p: 0 for p in itertools.permutations(range(3))}
        n = 10_000
        for _ in range(n):
            counts[draw_presentation_order(rng, 3)] += 1
        assert len(counts) == 6
        for order, count in counts.items():
            assert abs(count / n - 1 / 6) <= 0.02, (order, count)

    def test_log_replay_reconstructs_state_exactly(self, tmp_path):
        dataset = make_dataset(tmp_path / "dataset")
        store = RatingStore(tmp_path / "data")
        session = create_session(store, dataset, RATING_METHODS, 3, "expert-2", seed=11)
        for _ in range(2):
            payload = next_sample_payload(store, session.session_id)
            submit_rating(
                store,
                session.session_id,
                payload["sample_id"],
                [c["candidate_id"] for c in payload["candidates"]],
            )

        replayed = RatingStore(store.data_dir)
        original = store.get_session(session.session_id)
        recovered = replayed.get_session(session.session_id)
        assert recovered.to_dict() == original.to_dict()
        assert [r.to_dict() for r in replayed.ratings()] == [
            r.to_dict() for r in store.ratings()
        ]
        assert replayed.rated_sample_ids(session.session_id) == store.rated_sample_ids(
            session.session_id
        )
        assert (
            replayed.pending_sample(recovered).sample_id
            == store.pending_sample(original).sample_id
        )
