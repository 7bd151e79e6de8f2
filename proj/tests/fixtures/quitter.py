# Gives up on the first N instances, then exits with status 3.
import os
import socket
import sys
import time

rounds = int(sys.argv[1]) if len(sys.argv) > 1 else 3
sock = socket.create_connection((os.environ.get("PAL_HOST", "127.0.0.1"), int(os.environ["PAL_AGENT_PORT"])))
stream = sock.makefile("rw")


def send(line):
    stream.write(line + "\n")
    stream.flush()
    return stream.readline()


send("START")
for i in range(rounds):
    while '"SUCCESS"' not in send("CHECK_COST"):
        time.sleep(0.02)
    print("round", i, flush=True)
    send("REPORT_NOVELTY -l 1 -c 50 -m round %d" % i)
    send("GIVE_UP")
    send("CHECK_COST")
sys.exit(3)
