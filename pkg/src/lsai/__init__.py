"""Multi-robot cooperative sensing simulator with large/small model codesign.

Submodules:
    model_core   -- dense MLP parameter vectors, forward/backprop/SGD, byte format
    aggregation  -- attention-weighted model aggregation at the edge
    splitting    -- magnitude pruning + masked fine-tuning of the global model
    fusion       -- branch injection of a sub-model into a local policy net
    policy_rl    -- DDPG actor-critic training for sensing path planning
    world        -- 2D arena, coverage grid, kinematics, energy, collisions
    comms        -- FIFO link model, topologies, round scheduling
    experiment   -- metrics, method pipelines, sweeps, CSV emission
    cli          -- command line entry point
"""

__version__ = "0.1.0"
