"""Start a small live label service for the console integration test.

Binds an ephemeral port, prints ``PORT <n>`` once the app is
constructed, then feeds a paced error trace through a freshly trained
tiny detector. The trace is long and slow enough that the test can
fetch pending queries, label them, and watch the next emissions fold
the answers into the prototypes.
"""

import socket
import sys

from driftlab.active import ActiveConfig, DetectionLoop
from driftlab.bench import build_meta_corpus
from driftlab.features import WindowSpec
from driftlab.proto import TrainConfig, train_meta_detector
from driftlab.service import serve, trace_feed
from driftlab.streams import DriftKind, simulate_error_trace


def free_port() -> int:
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


def main() -> None:
    spec = WindowSpec(n=5, L=20)
    corpus = build_meta_corpus(spec, per_class=30, seed=11)
    cfg = TrainConfig(episodes=200, n_support=5, n_query=10, seed=11)
    detector, _ = train_meta_detector(corpus, spec, config=cfg)

    # Sudden jump mid-trace; with n=5 the loop emits every 5 samples
    # after the 105-sample warmup, so a 0.03 s pace leaves the test
    # several seconds of live emissions after it labels.
    trace = simulate_error_trace(
        DriftKind.SUDDEN, 400, 0.15, drift_error=0.6, position=250, seed=6)
    loop = DetectionLoop(
        detector, ActiveConfig(label_budget=5, expire_after=1000))

    port = free_port()
    print(f"PORT {port}", flush=True)
    serve(loop, trace_feed(loop, (int(v) for v in trace), pace=0.03),
          port=port)


if __name__ == "__main__":
    sys.exit(main())
