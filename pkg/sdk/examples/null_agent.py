"""The smallest possible bridge agent: observe nothing, trade nothing.

Run under the harness:
  pmbench run --episodes EPS --agent bridge --agent-cmd "python3 sdk/examples/null_agent.py"
"""

from pmbench_agent_sdk import run_agent


def step(ctx):
    pass  # done is sent automatically


if __name__ == "__main__":
    run_agent(step)
