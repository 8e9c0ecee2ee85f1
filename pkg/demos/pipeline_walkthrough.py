"""Follow one frame through the pipeline, then watch the display loop.

Run with ``python3 demos/pipeline_walkthrough.py``.
"""

from rtface import run
from rtface.synthetic import bundled_scenarios, load_scenario

scenario = load_scenario(bundled_scenarios()["single_actor"])
result = run(scenario)

print(f"scenario {scenario.name!r}: {scenario.duration / 1000:.0f} s, {len(scenario.actors)} actor(s)\n")

# The first face is detected on frame 1; its journey is spread over several events.
first = [e for e in result.trace if e.data.get("frame") == 1 and e.kind != "evict"]
for e in first:
    extra = {k: v for k, v in e.data.items() if k in ("stage", "detections", "tasks", "wall_ms", "residual")}
    print(f"{e.ts / 1000:8.1f} ms  {e.kind:<15} {extra}")

# Meanwhile the display never waits: one annotated frame every 40 ms.
print("\nDisplay at a few instants:")
for a in result.annotated[::50]:
    labels = ", ".join(
        f"#{t.track_id} age={t.age} {t.gender} {t.expression} (stale {t.staleness_ms} ms)" for t in a.tracks
    ) or "no faces yet"
    print(f"{a.ts / 1000:8.1f} ms  frame {a.frame_id}: {labels}")

print("\n" + result.metrics.summary())
