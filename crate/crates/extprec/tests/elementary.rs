use proptest::prelude::*;
use splitlab_extprec::{elementary, ulps_apart, DoubleDouble, Elementary, QuadDouble, Real};

// Reference values from a 90-digit evaluation.
const GOLDEN: &[(Elementary, &str, &str)] = &[
    (Elementary::Exp, "0.5", "1.64872127070012814684865078781416357165377610071014801157507931164066102119"),
    (Elementary::Log, "0.5", "-0.69314718055994530941723212145817656807550013436025525412068000949339362197"),
    (Elementary::Sin, "0.5", "0.479425538604203000273287935215571388081803367940600675188616613125535000288"),
    (Elementary::Cos, "0.5", "0.877582561890372716116281582603829651991645197109744052997610868315950763274"),
    (Elementary::Sinh, "0.5", "0.52109530549374736162242562641149155910592898261148052794609357645280225089"),
    (Elementary::Cosh, "0.5", "1.1276259652063807852262251614026720125478471180986674836289857351878587703"),
    (Elementary::Sqrt, "0.5", "0.707106781186547524400844362104849039284835937688474036588339868995366239231"),
    (Elementary::Exp, "-3.75", "0.0235177458560091082361511851004329394700676552730724039467654046478258925332"),
    (Elementary::Sin, "-3.75", "0.57156131874234377243415557335029349791851489731372860810675128836714069332"),
    (Elementary::Cos, "-3.75", "-0.820559357339560722583112402290711047359295363216416938350633135320890775322"),
    (Elementary::Sinh, "-3.75", "-21.2487821271033869736410107182517126420533994771413563191132237395247078603"),
    (Elementary::Cosh, "-3.75", "21.2722998729593960818771619033521455815234671324144287230599891441725337528"),
    (Elementary::Exp, "12.25", "208981.288869712961511695710889127334840652626802772045620328156584344230752"),
    (Elementary::Log, "12.25", "2.50552593699073599137624124397000632312316919044321186867742028088837248156"),
    (Elementary::Sin, "12.25", "-0.311119354981127322583495945129642935072111033091882634396170133786963327853"),
    (Elementary::Cos, "12.25", "0.950370847067673517580530189010369783884003624483153742541335127629900216467"),
    (Elementary::Sinh, "12.25", "104490.644432463922059783350899758781910609789593069628784018772284033049414"),
    (Elementary::Cosh, "12.25", "104490.644437249039451912359989368552930042837209702416836309384300311181339"),
    (Elementary::Sqrt, "12.25", "3.5"),
    (Elementary::Exp, "40", "235385266837019985.407899910749034804508871617254555467236651251189289163526"),
    (Elementary::Log, "40", "3.68887945411393630285245569760071734375210175734928348427468791995435985362"),
    (Elementary::Sin, "40", "0.745113160479348786987709402636344342239499040030208724989146519183122612556"),
    (Elementary::Cos, "40", "-0.666938061652261844384092781933699987859254787854865966557462966177673120843"),
    (Elementary::Sinh, "40", "117692633418509992.703949955374517400130258680981483235953708234165315572823"),
    (Elementary::Cosh, "40", "117692633418509992.703949955374517404378612936273072231282943017023973590703"),
    (Elementary::Sqrt, "40", "6.32455532033675866399778708886543706743911027865043365371500970558518887728"),
    (Elementary::Exp, "-0.0009765625", "0.999023914181975662234711789610329430319202080778525185510167886595798283553"),
    (Elementary::Sin, "-0.0009765625", "-0.000976562344779578298906910168119786366802418046208258492718128820853233014206"),
    (Elementary::Cos, "-0.0009765625", "0.999999523162879692486369202949889069215510235208243466564977596463295975774"),
    (Elementary::Sinh, "-0.0009765625", "-0.000976562655220436504066751500638538073324774201609506945848098026682110368013"),
    (Elementary::Cosh, "-0.0009765625", "1.00000047683719609873877854111096796839252685498013469245601598462248039392"),
    (Elementary::Exp, "9.31322574615478515625e-10", "1.00000000093132257504915938475383403479204698449934477019333402093967858553"),
    (Elementary::Log, "9.31322574615478515625e-10", "-20.7944154167983592825169636437452970422650040308076576236204002848018086591"),
    (Elementary::Sin, "9.31322574615478515625e-10", "0.00000000093132257461547851549036773884228065188223706845975788793116772970039333013"),
    (Elementary::Cos, "9.31322574615478515625e-10", "0.999999999999999999566319131005798226428365395673950982307947515372037867446"),
    (Elementary::Sinh, "9.31322574615478515625e-10", "0.000000000931322574615478515759632261157719348129440418742948920993196683493689304298"),
    (Elementary::Cosh, "9.31322574615478515625e-10", "1.00000000000000000043368086899420177363432763636990435145038509994648190204"),
    (Elementary::Sqrt, "9.31322574615478515625e-10", "0.000030517578125"),
    (Elementary::Exp, "-31.375", "0.0000000000000236597760913476149169353057356948978193983915997925903152669316222150493262"),
    (Elementary::Sin, "-31.375", "0.0409151116574164048186471109402511202415456088407318481906107672918415885193"),
    (Elementary::Cos, "-31.375", "0.999162626221608205032051364634358136017877919818840753353677491486802927878"),
    (Elementary::Sinh, "-31.375", "-21132913433734.9077853591946335345434523835181734424537482072346164871936439"),
    (Elementary::Cosh, "-31.375", "21132913433734.9077853591946571943195437311330903777594839021324358855852437"),
    (Elementary::Exp, "200.5", "1.19136166530300784600987708884272652449207610545256213798677281402079191396e+87"),
    (Elementary::Log, "200.5", "5.30081424674662387643344696589117316280243718657952655096859640374616328561"),
    (Elementary::Sin, "200.5", "-0.532820265889432399298412815773421506489944744213965726635029054892885926534"),
    (Elementary::Cos, "200.5", "0.846228435032476653789306319443955477017636802001894359193411289681327033246"),
    (Elementary::Sinh, "200.5", "5.95680832651503923004938544421363262246038052726281068993386407010395956981e+86"),
    (Elementary::Cosh, "200.5", "5.95680832651503923004938544421363262246038052726281068993386407010395956981e+86"),
    (Elementary::Sqrt, "200.5", "14.1598022585062959628423811142041693560674698258681693321692488757307161157"),
    (Elementary::Arccos, "0.3", "1.26610367277949911125931873041222227514402466798077652309449434740743521063"),
    (Elementary::Arccos, "-0.75", "2.41885840577637762728426603063816952217195091295066555334819045972410902437"),
    (Elementary::Arccos, "0.7071", "0.78540775339744889759838027648938542955237045167760974066332131096691460406"),
    (Elementary::Arccosh, "1.5", "0.962423650119206894995517826848736846270368668771321039322036337680327735216"),
    (Elementary::Arccosh, "1.0009765625", "0.0441905780831100944299637635287994671116916497867872322058681426155767250248"),
    (Elementary::Arccosh, "1e5", "12.2060726455051737295062518948799455227476708262020365548602361621990952105"),
    (Elementary::Arccosh, "3.1622776601683793319988935444327185337195551393252168268575", "1.81844645923206682348369896356070899378625394276812161745174254963552262832"),
];

const EXP_MINUS_TEN_PI: &str =
    "2.27110106832409383867927523909354754449099655455022911741121067985985143434e-14";

fn check_golden<T: Real>(tol_ulps: f64) {
    for &(f, x, want) in GOLDEN {
        let x = T::parse_real(x).unwrap();
        let want = T::parse_real(want).unwrap();
        let got = elementary(f, x).unwrap();
        let d = ulps_apart(got, want);
        assert!(d <= tol_ulps, "{}({x}) = {got}, want {want}: {d} ulp", f.name());
    }
}

#[test]
fn golden_values_dd() {
    check_golden::<DoubleDouble>(8.0);
}

#[test]
fn golden_values_qd() {
    check_golden::<QuadDouble>(8.0);
}

#[test]
fn exp_of_minus_ten_pi() {
    let want = DoubleDouble::parse_real(EXP_MINUS_TEN_PI).unwrap();
    let got = (-DoubleDouble::pi() * 10.0).exp();
    assert!(ulps_apart(got, want) <= 8.0);
    let want = QuadDouble::parse_real(EXP_MINUS_TEN_PI).unwrap();
    let got = (-QuadDouble::pi() * 10.0).exp();
    assert!(ulps_apart(got, want) <= 8.0);
    assert!((got.to_f64() - 2.27e-14).abs() < 1e-16);
}

#[test]
fn trivial_identities() {
    assert_eq!(elementary(Elementary::Exp, DoubleDouble::zero()).unwrap(), DoubleDouble::one());
    assert_eq!(elementary(Elementary::Arccosh, QuadDouble::one()).unwrap(), QuadDouble::zero());
}

#[test]
fn decimal_round_trip_is_lossless() {
    let x = QuadDouble::pi() / 7.0;
    let y = QuadDouble::parse_real(&x.to_string()).unwrap();
    assert_eq!(x, y);
    let x = DoubleDouble::ln2().exp();
    let y = DoubleDouble::parse_real(&x.to_string()).unwrap();
    assert_eq!(x, y);
}

fn log_uniform(t: f64) -> f64 {
    // t in [0, 1] -> [1.001, 1e4]
    (1.001f64.ln() + t * (1e4f64.ln() - 1.001f64.ln())).exp()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn cosh_acosh_round_trip_dd(t in 0.0f64..1.0) {
        let x = DoubleDouble::from_f64(log_uniform(t));
        prop_assert!(ulps_apart(x.acosh().cosh(), x) <= 16.0);
    }

    #[test]
    fn cosh_acosh_round_trip_qd(t in 0.0f64..1.0) {
        let x = QuadDouble::from_f64(log_uniform(t));
        prop_assert!(ulps_apart(x.acosh().cosh(), x) <= 16.0);
    }

    #[test]
    fn pythagorean_identity_dd(x in -50.0f64..50.0) {
        let (s, c) = DoubleDouble::from_f64(x).sin_cos();
        let one = s * s + c * c;
        prop_assert!(ulps_apart(one, DoubleDouble::one()) <= 16.0);
    }

    #[test]
    fn pythagorean_identity_qd(x in -50.0f64..50.0) {
        let (s, c) = QuadDouble::from_f64(x).sin_cos();
        let one = s * s + c * c;
        prop_assert!(ulps_apart(one, QuadDouble::one()) <= 16.0);
    }

    #[test]
    fn dd_agrees_with_std(x in -20.0f64..20.0) {
        let dd = DoubleDouble::from_f64(x);
        for f in Elementary::ALL {
            let arg = match f {
                Elementary::Log | Elementary::Sqrt => x.abs() + 1e-3,
                Elementary::Arccos => x / 20.0,
                Elementary::Arccosh => x.abs() + 1.0,
                _ => x,
            };
            let a = elementary(f, arg).unwrap();
            let b = elementary(f, DoubleDouble::from_f64(arg)).unwrap().to_f64();
            let scale = a.abs().max(1e-300);
            prop_assert!((a - b).abs() / scale <= 1e-15, "{} at {}: {} vs {}", f.name(), arg, a, b);
        }
        let _ = dd;
    }
}
