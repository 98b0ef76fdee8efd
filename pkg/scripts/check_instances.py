import logging

from uamdp.core.errors import UamdpError
from uamdp.oracle.bamdp import list_instances, load_instance
from uamdp.oracle.solver import exact_bayes_value, exact_mdp_optimal

logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)


def check_instances() -> int:
    """Проверка поставляемых малых BAMDP и их точных ценностей"""
    failed = 0
    for name in list_instances():
        try:
            p = load_instance(name)
            table = exact_bayes_value(p)
            logger.info(
                f"{p.name}: S={p.n_states}, A={p.n_actions}, |Θ|={len(p.thetas)}, H={p.horizon}, "
                f"γ={p.discount}, V*={table.root:.6f}, узлов {len(table.nodes)}"
            )
            for theta in p.thetas:
                solution = exact_mdp_optimal(p, theta)
                logger.info(f"- {theta.id}: V(M(θ))={solution.value(p.initial_state):.6f}")
        except UamdpError as e:
            logger.error(f"Ошибка в задаче {name}: {e}")
            failed += 1
    logger.info(f"Проверено задач: {len(list_instances())}, с ошибками: {failed}")
    return failed


if __name__ == "__main__":
    raise SystemExit(1 if check_instances() else 0)
