"""
usage.py

Usage:
    python usage.py [scenario.yaml] [method] [--seed N]

Arguments:
    scenario.yaml: Optional scenario merged over the packaged default.
    method:        Fusion method to run ('pm', 'ds', 'ddf' or an alias). Default 'pm'.

Example:
    python usage.py my_scenario.yaml pm --seed 3
"""

import argparse
import sys

from pm_fusion import (
    ConfigurationError,
    get_global_registry,
    load_scenario,
    register_default_methods,
    run_episode,
    to_json,
)

# Registry is initialized on import via pm_fusion.__init__ but an explicit call is safe
register_default_methods()


def describe_step(step, layout) -> str:
    belief = ", ".join(f"{name}={p:.3f}" for name, p in zip(layout.type_names, step.aggregate))
    decision = step.decision.label if step.decision else "-"
    return f"t={step.time:2d}  reports={len(step.reports):2d}  [{belief}]  next={decision}"


def main():
    parser = argparse.ArgumentParser(description="Classify one object and print the episode trace.")
    parser.add_argument("scenario", nargs="?", help="Path to a scenario YAML file.")
    parser.add_argument("method", nargs="?", default="pm", help="Fusion method.")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--json", action="store_true", help="Dump the full episode record as JSON.")
    args = parser.parse_args()

    try:
        config = load_scenario(args.scenario)
    except ConfigurationError as e:
        print(f"Error loading scenario: {e}")
        sys.exit(1)

    registry = get_global_registry()
    try:
        registry.canonical_name(args.method)
    except KeyError:
        print(f"Error: Method '{args.method}' not found. Available: {registry.list_methods()}")
        sys.exit(1)

    obj = config.objects[0]
    print(f"Classifying {obj.id} (true type: {config.layout.type_name(obj.type_index)}) with {args.method}...")
    record = run_episode(config, args.seed, args.method, obj)

    for step in record.steps:
        print(describe_step(step, config.layout))
    print(
        f"Classified as {config.layout.type_name(record.classified_type)} after {record.steps_used} steps "
        f"({'correct' if record.correct else 'wrong'}), final RMSE {record.final_metrics.rmse:.4f}"
    )
    for agent_id, settled in record.settlement.items():
        print(f"  {agent_id:6s} reports={settled.reports}  paid={settled.total:.3f}")

    if args.json:
        print(to_json(record))


if __name__ == "__main__":
    main()
