#include <math.h>
#include <stdio.h>
#include "rcurl.h"

static int fail(const char *what, int code) {
    char msg[512];
    if (rc_last_error_message(msg, sizeof msg) != RC_OK) msg[0] = 0;
    fprintf(stderr, "%s failed (%d): %s\n", what, code, msg);
    return 1;
}

int main(void) {
    RcEnv *env = NULL;
    int rc = rc_env_new("robot_nav", 0.5, 7, &env);
    if (rc != RC_OK) return fail("rc_env_new", rc);
    size_t od = rc_env_obs_dim(env), ad = rc_env_act_dim(env);
    double obs[178], act[2] = {0.3, 0.0};
    if (od != 178 || ad != 2) return fail("dims", -1);
    if ((rc = rc_env_reset(env, obs, od)) != RC_OK) return fail("rc_env_reset", rc);
    RcStep step;
    int steps = 0;
    do {
        if ((rc = rc_env_step(env, act, ad, obs, od, &step)) != RC_OK) return fail("rc_env_step", rc);
        steps++;
    } while (step.outcome == RC_OUTCOME_RUNNING);
    rc_env_free(env);

    if (rc_env_new("nope", 0.5, 7, &env) != RC_ERR_CONFIG) return fail("bad name accepted", -1);

    RcController *c = NULL;
    rc_controller_new(-50.0, 2, &c);
    bool switched = false;
    rc_controller_record(c, -60.0, &switched);
    rc_controller_record(c, -70.0, &switched);
    if (!switched || rc_controller_phase(c) != 1) return fail("controller", -1);
    rc_controller_free(c);

    double n = 0;
    rc_normalize_return(0.0, -1000.0, 1000.0, &n);
    if (fabs(n - 0.5) > 1e-12) return fail("normalize", -1);
    printf("ok %d\n", steps);
    return 0;
}
