from fractions import Fraction

from pmpsim.kernel import RandomSource, Simulator
from pmpsim.qos import SchedulingClass
from pmpsim.scenario import FlowSpec
from pmpsim.traffic import (build_literal_scenario, build_paper_scenario,
                            make_source)


def collect(kind_dict, duration_us, seed=1):
    spec = FlowSpec.from_dict(dict(kind_dict), "flows[0]")
    sim = Simulator(seed)
    out = []
    src = make_source(spec, 1, sim.rng)
    src.start(sim, duration_us, lambda cid, size: out.append((sim.now, size)))
    sim.run_until(duration_us)
    return out


def test_voice_one_packet_per_frame_deterministic():
    out = collect({"kind": "voice", "src": 1, "dst": 2}, 1_000_000)
    assert len(out) == 80  # one per 12.5 ms
    assert all(size == 100 for _, size in out)
    assert [t for t, _ in out] == [i * 12_500 for i in range(80)]


def test_voip_silence_suppresses_some_frames():
    out = collect({"kind": "voip_silence", "src": 1, "dst": 2}, 60_000_000, seed=7)
    frames = 60_000_000 // 12_500
    # duty cycle 1.2/(1.2+1.8) = 0.4; loose band, tight enough to prove on/off
    assert 0.15 * frames < len(out) < 0.75 * frames
    assert all(size == 100 for _, size in out)


def test_voip_emissions_cluster_in_talk_phases():
    out = collect({"kind": "voip_silence", "src": 1, "dst": 2}, 60_000_000, seed=3)
    gaps = [b - a for (a, _), (b, _) in zip(out, out[1:])]
    # silence phases appear as gaps far longer than the 12.5 ms packet period
    assert max(gaps) > 10 * 12_500
    assert min(gaps) == 12_500


def test_video_mean_frame_size_within_5_percent():
    spec = FlowSpec.from_dict({"kind": "video", "src": 1, "dst": 2}, "flows[0]")
    sim = Simulator(11)
    sizes = []
    src = make_source(spec, 1, sim.rng)
    src.start(sim, 400_000_000, lambda cid, size: sizes.append((sim.now, size)))
    sim.run_until(400_000_000)  # 10^4 video frames at 40 ms
    frames = {}
    for t, size in sizes:
        frames[t] = frames.get(t, 0) + size
    assert len(frames) == 10_000
    mean = sum(frames.values()) / len(frames)
    assert abs(mean - 6_000) / 6_000 < 0.05
    assert max(frames.values()) <= 20_000
    assert all(s <= 1500 for _, s in sizes)  # MTU-sized SDUs


def test_ftp_offered_rate_exact():
    out = collect({"kind": "ftp", "src": 1, "dst": 2}, 30_000_000)
    total_bits = sum(s for _, s in out) * 8
    rate = total_bits / 30.0
    assert abs(rate - 2_000_000) / 2_000_000 < 0.01
    assert all(s == 1500 for _, s in out)


def test_http_bursts_bounded_and_mtu_split():
    out = collect({"kind": "http", "src": 1, "dst": 2}, 120_000_000, seed=5)
    pages = {}
    for t, size in out:
        pages[t] = pages.get(t, 0) + size
    assert pages, "expected at least one page in 120 s"
    assert max(pages.values()) <= 500_000
    assert all(s <= 1500 for _, s in out)


def test_sources_deterministic_for_seed():
    a = collect({"kind": "http", "src": 1, "dst": 2}, 60_000_000, seed=9)
    b = collect({"kind": "http", "src": 1, "dst": 2}, 60_000_000, seed=9)
    assert a == b


def test_start_stop_window_respected():
    out = collect({"kind": "ftp", "src": 1, "dst": 2,
                   "start_us": 1_000_000, "stop_us": 2_000_000}, 10_000_000)
    assert out
    assert all(1_000_000 <= t < 2_000_000 for t, _ in out)


# ------------------------------------------------------- built-in scenarios

def test_paper_scenario_shape():
    sc = build_paper_scenario()
    assert sc.station_count == 5
    assert len(sc.flows) == 5
    assert sc.frame.frame_duration_us == 12_500
    assert sc.frame.ttg_us == 106 and sc.frame.rtg_us == 60
    assert sc.frame.channel_bandwidth_hz == 20_000_000
    matrix = {(f.kind, f.src, f.dst) for f in sc.flows}
    assert matrix == {("ftp", 1, 2), ("video", 2, 3), ("http", 3, 4),
                      ("voip_silence", 5, 4), ("voice", 4, 1)}


def test_paper_scenario_class_pairing():
    by_kind = {f.kind: f.cls for f in build_paper_scenario().flows}
    assert by_kind == {"voice": SchedulingClass.UGS,
                       "video": SchedulingClass.RTPS,
                       "voip_silence": SchedulingClass.ERTPS,
                       "ftp": SchedulingClass.NRTPS,
                       "http": SchedulingClass.BE}


def test_literal_variant_sources_from_ss4():
    sc = build_literal_scenario()
    voip = [f for f in sc.flows if f.kind == "voip_silence"][0]
    voice = [f for f in sc.flows if f.kind == "voice"][0]
    assert voip.src == 4 and voice.src == 4
