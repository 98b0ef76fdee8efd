import time
from argparse import Namespace

from uamdp.handlers.common import print_frame
from uamdp.harness.regret_suite import L_LIST, N_LIST, bound_violations, run_regret_suite
from uamdp.middlewares.error_handler import EXIT_FAILURE
from uamdp.utils.export import export_manager
from uamdp.utils.logger import log_manager


async def regret_handler(args: Namespace) -> int:
    """Обработчик подкоманды regret"""
    started = time.time()
    depths = args.depths or [L for L in L_LIST if L is not None]
    table = run_regret_suite(
        instances=args.instances,
        n_list=args.n_particles or list(N_LIST),
        l_list=depths,
        episodes=args.episodes,
        seeds=args.seeds or [0],
    )
    path = await export_manager.export_frame(table, "regret.csv", target_dir=args.output_dir)

    columns = ["instance", "agent", "regret_mean", "ci_low", "ci_high", "gap", "bound", "bound_ok"]
    print_frame(table[columns], "Байесовское сожаление")
    print(f"\nТаблица: {path}")
    log_manager.log_run("regret", {"env": "tiny-bamdp", "seeds": args.seeds or [0]}, time.time() - started)

    violations = bound_violations(table)
    if violations:
        print(f"❌ Нарушений границы ошибки: {violations}")
        return EXIT_FAILURE
    return 0


def register_handlers(subparsers):
    """Регистрация подкоманды regret"""
    parser = subparsers.add_parser("regret", help="Сожаление на малых BAMDP по сетке (N, L)")
    parser.add_argument("--instance", dest="instances", action="append", help="Имя или путь задачи")
    parser.add_argument("--n-particles", dest="n_particles", type=int, action="append")
    parser.add_argument("--depth", dest="depths", type=int, action="append")
    parser.add_argument("--episodes", type=int, default=2000)
    parser.add_argument("--seed", dest="seeds", type=int, action="append")
    parser.add_argument("--output-dir", default="results")
    parser.set_defaults(handler=regret_handler)
