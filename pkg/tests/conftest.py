import pytest

from speconsim.model import Category, ClusterState, ContainerState, WorkerState


def make_cluster(n_workers=2, cpu_capacity=10.0, reserved_fraction=0.2, now=0.0):
    return ClusterState(
        workers={
            w: WorkerState(w, cpu_capacity, reserved_fraction) for w in range(n_workers)
        },
        now=now,
    )


def add_container(
    cluster,
    cid,
    host,
    *,
    total_iterations=1000,
    cpu_demand=4.0,
    iter_rate=2.0,
    submitted_at=0.0,
    category=Category.PROGRESSING,
    completed_iterations=0.0,
):
    c = ContainerState(
        id=cid,
        host=host,
        model_profile="vae",
        total_iterations=total_iterations,
        cpu_demand=cpu_demand,
        iter_rate=iter_rate,
        submitted_at=submitted_at,
        completed_iterations=completed_iterations,
    )
    c.category = category
    cluster.containers[cid] = c
    cluster.workers[host].residents.add(cid)
    cluster.workers[host].category_set(category).add(cid)
    return c


@pytest.fixture
def cluster():
    return make_cluster()
