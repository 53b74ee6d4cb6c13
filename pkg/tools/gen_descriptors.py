"""Regenerate the bundled module descriptors under src/hookcost/data/modules.

Hook membership per category is drawn from LSM hook-name pools: hooks that
carry placements come first, then the pool in order until the category count
is met.  Run from the repository root:

    python tools/gen_descriptors.py
"""

import json
from pathlib import Path

OUT = Path(__file__).resolve().parents[1] / "src" / "hookcost" / "data" / "modules"

POOLS = {
    "inode": [
        "inode_permission", "inode_getattr", "inode_setattr", "inode_rename",
        "inode_mkdir", "inode_rmdir", "inode_symlink", "inode_unlink",
        "inode_alloc_security", "inode_free_security", "inode_init_security",
        "inode_create", "inode_link", "inode_mknod", "inode_readlink",
        "inode_follow_link", "inode_setxattr", "inode_post_setxattr",
        "inode_getxattr", "inode_listxattr", "inode_removexattr",
        "inode_getsecurity", "inode_setsecurity", "inode_listsecurity",
        "inode_getsecid", "inode_copy_up", "inode_copy_up_xattr",
        "inode_invalidate_secctx", "inode_notifysecctx", "inode_setsecctx",
        "inode_getsecctx", "inode_need_killpriv", "inode_killpriv",
    ],
    "dentry": ["dentry_init_security", "dentry_create_files_as"],
    "file": [
        "file_permission", "file_open", "file_alloc_security",
        "file_free_security", "file_ioctl", "file_fcntl", "file_lock",
        "file_mprotect", "file_receive", "file_set_fowner",
        "file_send_sigiotask",
    ],
    "superblock": [
        "sb_alloc_security", "sb_free_security", "sb_eat_lsm_opts",
        "sb_remount", "sb_kern_mount", "sb_show_options", "sb_statfs",
        "sb_mount", "sb_umount", "sb_pivotroot", "sb_set_mnt_opts",
        "sb_clone_mnt_opts", "sb_add_mnt_opt", "sb_free_mnt_opts",
        "fs_context_dup", "fs_context_parse_param", "move_mount",
    ],
    "mmap": ["mmap_file", "mmap_addr"],
    "path": [
        "path_unlink", "path_mkdir", "path_rmdir", "path_mknod",
        "path_truncate", "path_symlink", "path_link", "path_rename",
        "path_chmod", "path_chown", "path_chroot", "path_notify",
    ],
    "bprm": [
        "bprm_set_creds", "bprm_check_security", "bprm_committing_creds",
        "bprm_committed_creds",
    ],
    "task": [
        "task_alloc", "task_free", "task_fix_setuid", "task_setpgid",
        "task_getpgid", "task_getsid", "task_getsecid", "task_setnice",
        "task_setioprio", "task_getioprio", "task_prlimit", "task_setrlimit",
        "task_setscheduler", "task_getscheduler", "task_movememory",
        "task_kill", "task_prctl", "task_to_inode",
    ],
    "proc": ["getprocattr", "setprocattr"],
    "ptrace": ["ptrace_access_check", "ptrace_traceme"],
    "cap": ["capable", "capget", "capset"],
    "seclabel": ["ismaclabel", "secid_to_secctx", "secctx_to_secid", "release_secctx"],
    "cred": [
        "cred_prepare", "cred_transfer", "cred_free", "cred_alloc_blank",
        "cred_getsecid",
    ],
    "audit": ["audit_rule_init", "audit_rule_known", "audit_rule_match", "audit_rule_free"],
    "other": [
        "settime", "vm_enough_memory", "syslog", "quotactl", "quota_on",
        "binder_set_context_mgr", "binder_transaction", "binder_transfer_binder",
        "binder_transfer_file", "kernel_act_as", "kernel_create_files_as",
        "kernel_module_request", "kernel_load_data", "kernel_read_file",
        "kernel_post_read_file", "kernfs_init_security", "d_instantiate",
        "netlink_send", "unix_stream_connect", "unix_may_send",
        "socket_create", "socket_post_create", "socket_socketpair",
        "socket_bind", "socket_connect", "socket_listen", "socket_accept",
        "socket_sendmsg", "socket_recvmsg", "socket_getsockname",
        "socket_getpeername", "socket_getsockopt", "socket_setsockopt",
        "socket_shutdown", "socket_sock_rcv_skb", "socket_getpeersec_stream",
        "socket_getpeersec_dgram", "sk_alloc_security", "sk_free_security",
        "sk_clone_security", "sk_getsecid", "sock_graft",
        "inet_conn_request", "inet_csk_clone", "inet_conn_established",
        "secmark_relabel_packet", "secmark_refcount_inc",
        "secmark_refcount_dec", "req_classify_flow", "tun_dev_alloc_security",
        "tun_dev_free_security", "tun_dev_create", "tun_dev_attach_queue",
        "tun_dev_attach", "tun_dev_open", "sctp_assoc_request",
        "sctp_bind_connect", "sctp_sk_clone", "ib_pkey_access",
        "ib_endport_manage_subnet", "ib_alloc_security", "ib_free_security",
        "xfrm_policy_alloc_security", "xfrm_policy_clone_security",
        "xfrm_policy_free_security", "xfrm_policy_delete_security",
        "xfrm_state_alloc", "xfrm_state_alloc_acquire",
        "xfrm_state_free_security", "xfrm_state_delete_security",
        "xfrm_policy_lookup", "xfrm_state_pol_flow_match",
        "xfrm_decode_session", "key_alloc", "key_free", "key_permission",
        "key_getsecurity", "ipc_permission", "ipc_getsecid",
        "msg_msg_alloc_security", "msg_msg_free_security",
        "msg_queue_alloc_security", "msg_queue_free_security",
        "msg_queue_associate", "msg_queue_msgctl", "msg_queue_msgsnd",
        "msg_queue_msgrcv", "shm_alloc_security", "shm_free_security",
        "shm_associate", "shm_shmctl", "shm_shmat", "sem_alloc_security",
        "sem_free_security", "sem_associate", "sem_semctl", "sem_semop",
        "bpf", "bpf_map", "bpf_prog", "bpf_map_alloc_security",
        "bpf_map_free_security", "bpf_prog_alloc_security",
        "bpf_prog_free_security",
    ],
}

# Declared hook counts per SSO category for each module.
COUNTS = {
    "capability": dict(inode=3, mmap=2, bprm=1, task=5, ptrace=2, cap=3),
    "selinux": dict(inode=31, dentry=2, file=10, superblock=13, mmap=2, bprm=3,
                    task=15, proc=2, ptrace=2, cap=3, seclabel=3, cred=3, audit=4),
    "apparmor": dict(inode=1, file=7, superblock=3, mmap=1, path=10, bprm=3,
                     task=5, cap=2, cred=4, audit=4),
    "smack": dict(inode=22, dentry=1, file=8, superblock=6, mmap=2, bprm=1,
                  task=12, proc=2, ptrace=2, seclabel=3, cred=5, audit=3),
    "tomoyo": dict(inode=1, file=3, superblock=3, path=11, bprm=2, task=2, cred=1),
    "yama": dict(task=2, ptrace=2),
}
TOTAL_HOOKS = {"capability": 18, "selinux": 204, "apparmor": 68, "smack": 108,
               "tomoyo": 28, "yama": 4}
FILE_TOTAL = {"capability": 4, "selinux": 59, "apparmor": 24, "smack": 38,
              "tomoyo": 20, "yama": 0}

# Real membership where it is well known.
PREFERRED = {
    "capability": {
        "inode": ["inode_need_killpriv", "inode_killpriv", "inode_getsecurity"],
        "task": ["task_fix_setuid", "task_prctl", "task_setscheduler",
                 "task_setioprio", "task_setnice"],
        "other": ["settime", "vm_enough_memory"],
    },
    "apparmor": {"inode": ["inode_getattr"]},
    "tomoyo": {
        "inode": ["inode_getattr"],
        "file": ["file_open", "file_fcntl", "file_ioctl"],
        "superblock": ["sb_mount", "sb_umount", "sb_pivotroot"],
    },
    "yama": {"task": ["task_prctl", "task_free"]},
}

# Lines of code per hook, used as the default per-firing cost in ns.
LOC_PER_HOOK = {"capability": 43, "selinux": 104, "apparmor": 175, "smack": 50,
                "tomoyo": 295, "yama": 0, "evm": 509, "ima": 509, "tunable": 104}

def p(per_depth=0, constant=0):
    return (per_depth, constant)


# Hook placement by syscall for the four major modules; columns SELinux,
# AppArmor, SMACK, TOMOYO.  None means no placement.
PLACEMENT_CELLS = [
    ("open", "inode_permission", [p(6), None, p(6), None]),
    ("open", "file_open", [p(6), p(6), p(6), p(6)]),
    ("openat", "inode_permission", [p(0, 6), None, p(0, 6), None]),
    ("openat", "file_open", [p(0, 6)] * 4),
    ("creat", "inode_permission", [p(1), None, p(1), None]),
    ("rename", "inode_rename", [p(0, 2), None, p(0, 2), None]),
    ("rename", "path_rename", [None, p(0, 1), None, p(0, 1)]),
    ("sendfile", "inode_permission", [p(0, 5), None, p(0, 5), None]),
    ("sendfile", "file_permission", [p(0, 2), p(0, 2), None, None]),
    ("read", "file_permission", [p(0, 1), p(0, 1), None, None]),
    ("write", "file_permission", [p(0, 1), p(0, 1), None, None]),
    ("chmod", "path_chmod", [None, p(1), None, p(1)]),
    ("chmod", "inode_permission", [p(1), None, p(1), None]),
    ("chmod", "inode_setattr", [p(0, 1), None, p(0, 1), None]),
    ("fchmod", "path_chmod", [None, p(0, 1), None, p(0, 1)]),
    ("fchmod", "inode_permission", [p(0, 1), None, p(0, 1), None]),
    ("fchmod", "inode_setattr", [p(0, 1), None, p(0, 1), None]),
]
for _op in ("mkdir", "rmdir", "symlink", "unlink"):
    PLACEMENT_CELLS += [
        (_op, f"path_{_op}", [None, p(1), None, p(1)]),
        (_op, f"inode_{_op}", [p(1), None, p(1), None]),
        (_op, "inode_permission", [p(1), None, p(1), None]),
    ]
# stat and its similar syscall fstatat; the TOMOYO inode_permission cell is
# dropped because TOMOYO declares a single inode hook (inode_getattr).
for _op in ("stat", "fstatat"):
    PLACEMENT_CELLS += [
        (_op, "inode_getattr", [p(0, 1)] * 4),
        (_op, "inode_permission", [p(1), None, None, None]),
    ]
COLUMNS = ["selinux", "apparmor", "smack", "tomoyo"]

# Tunable module: authorization firings per syscall.
TUNABLE = [
    ("open", "inode_permission", p(1)),
    ("open", "file_permission", p(0, 1)),
    ("openat", "inode_permission", p(0, 2)),
    ("openat", "file_permission", p(0, 1)),
    ("creat", "inode_permission", p(0, 2)),
    ("rename", "inode_permission", p(0, 6)),
    ("sendfile", "file_permission", p(0, 2)),
    ("read", "file_permission", p(0, 1)),
    ("write", "file_permission", p(0, 1)),
    ("mkdir", "inode_permission", p(1)),
    ("rmdir", "inode_permission", p(1)),
    ("symlink", "inode_permission", p(0, 2)),
    ("unlink", "inode_permission", p(0, 2)),
    ("chmod", "inode_permission", p(0, 1)),
    ("fchmod", "inode_permission", p(0, 1)),
    ("stat", "inode_permission", p(1)),
    ("fstatat", "inode_permission", p(1)),
]
TUNABLE_HOOKS = [
    ("bprm_set_creds", "bprm"),
    ("inode_alloc_security", "inode"),
    ("inode_init_security", "inode"),
    ("inode_setxattr", "inode"),
    ("inode_getsecid", "inode"),
    ("inode_create", "inode"),
    ("file_permission", "file"),
    ("inode_permission", "inode"),
]

EVM_HOOKS = [
    ("evm_inode_init_security", "inode"), ("evm_inode_setattr", "inode"),
    ("evm_inode_setxattr", "inode"), ("evm_inode_post_setxattr", "inode"),
    ("evm_inode_removexattr", "inode"),
]
IMA_HOOKS = [
    ("ima_inode_setxattr", "inode"), ("ima_inode_removexattr", "inode"),
    ("ima_file_check", "file"), ("ima_read_file", "file"),
    ("ima_post_read_file", "file"), ("ima_file_mmap", "mmap"),
    ("ima_bprm_check", "bprm"),
]

AUTH = {"inode_permission", "file_permission"}


def sec(name):
    return f"security_{name}"


def placements_for(module):
    if module in COLUMNS:
        col = COLUMNS.index(module)
        rows = [(s, h, cells[col]) for s, h, cells in PLACEMENT_CELLS if cells[col] is not None]
    elif module == "tunable":
        rows = TUNABLE
    else:
        rows = []
    return [
        {"syscall": s, "hook": sec(h), "per_depth": a, "constant": b}
        for s, h, (a, b) in rows
    ]


def hooks_for(module, placements):
    needed = {}
    for pl in placements:
        bare = pl["hook"][len("security_"):]
        cat = next(c for c, pool in POOLS.items() if bare in pool)
        needed.setdefault(cat, [])
        if bare not in needed[cat]:
            needed[cat].append(bare)
    hooks = []
    for cat, count in COUNTS[module].items():
        chosen = list(needed.get(cat, []))
        for name in PREFERRED.get(module, {}).get(cat, []):
            if name not in chosen:
                chosen.append(name)
        for name in POOLS[cat]:
            if len(chosen) >= count:
                break
            if name not in chosen:
                chosen.append(name)
        assert len(chosen) == count, (module, cat, len(chosen), count)
        hooks += [(name, cat) for name in chosen]
    rest = TOTAL_HOOKS[module] - len(hooks)
    other = list(PREFERRED.get(module, {}).get("other", []))
    taken = {name for name, _ in hooks}
    # Categorized names this module does not use are real hooks too; they
    # back-fill the uncategorized remainder once the plain pool runs out.
    spill = [n for cat, pool in POOLS.items() if cat != "other" for n in pool]
    for name in POOLS["other"] + [n for n in spill if n not in taken]:
        if len(other) >= rest:
            break
        if name not in other:
            other.append(name)
    assert len(other) == rest, (module, len(other), rest)
    hooks += [(name, "other") for name in other]
    return [
        {"id": sec(n), "sso_category": c, "is_authorization": n in AUTH}
        for n, c in hooks
    ]


def descriptor(module):
    doc = {"name": module}
    if module in ("evm", "ima"):
        raw = EVM_HOOKS if module == "evm" else IMA_HOOKS
        hooks = [{"id": n, "sso_category": c, "is_authorization": False} for n, c in raw]
        counts = {}
        for _, c in raw:
            counts[c] = counts.get(c, 0) + 1
        doc.update(
            hooks=hooks, placements=[],
            hook_counts_by_category=counts,
            total_file_accessing={"evm": 5, "ima": 6}[module],
            total_hooks=len(hooks),
        )
    elif module == "tunable":
        placements = placements_for(module)
        hooks = [
            {"id": sec(n), "sso_category": c, "is_authorization": n in AUTH}
            for n, c in TUNABLE_HOOKS
        ]
        doc.update(hooks=hooks, placements=placements, total_hooks=len(hooks))
    else:
        placements = placements_for(module)
        doc.update(
            hooks=hooks_for(module, placements),
            placements=placements,
            hook_counts_by_category=COUNTS[module],
            total_file_accessing=FILE_TOTAL[module],
            total_hooks=TOTAL_HOOKS[module],
        )
    doc["default_hook_cost_ns"] = LOC_PER_HOOK[module]
    doc["per_hook_cost_ns"] = {}
    if module == "selinux":
        doc["cache"] = {"max_entries": 512}
    return doc


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for module in ["capability", "selinux", "apparmor", "smack", "tomoyo",
                   "yama", "evm", "ima", "tunable"]:
        path = OUT / f"{module}.json"
        path.write_text(json.dumps(descriptor(module), indent=1) + "\n")
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
